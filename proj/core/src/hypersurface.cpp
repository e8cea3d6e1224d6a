#include "bolab/hypersurface.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

#include "bolab/cache.hpp"
#include "bolab/eigensolve.hpp"
#include "bolab/error.hpp"
#include "bolab/richardson.hpp"

namespace bolab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

double cross(double ax, double ay, double bx, double by) { return ax * by - ay * bx; }

// Closed-segment intersection in the plane, touching included.
bool segments_meet(const CurvePoint& p1, const CurvePoint& p2, const CurvePoint& q1, const CurvePoint& q2,
                   double tol) {
  const double d1 = cross(p2.x - p1.x, p2.y - p1.y, q1.x - p1.x, q1.y - p1.y);
  const double d2 = cross(p2.x - p1.x, p2.y - p1.y, q2.x - p1.x, q2.y - p1.y);
  const double d3 = cross(q2.x - q1.x, q2.y - q1.y, p1.x - q1.x, p1.y - q1.y);
  const double d4 = cross(q2.x - q1.x, q2.y - q1.y, p2.x - q1.x, p2.y - q1.y);
  const auto side = [tol](double d) { return d > tol ? 1 : (d < -tol ? -1 : 0); };
  return side(d1) * side(d2) <= 0 && side(d3) * side(d4) <= 0;
}

// Trigonometric interpolant of periodic samples on theta_i = 2 pi i / M.
class TrigInterpolant {
 public:
  explicit TrigInterpolant(std::span<const double> samples) : m_(samples.size()) {
    const std::size_t half = m_ / 2;
    cos_.assign(half + 1, 0.0);
    sin_.assign(half + 1, 0.0);
    for (std::size_t k = 0; k <= half; ++k) {
      double c = 0.0;
      double s = 0.0;
      for (std::size_t i = 0; i < m_; ++i) {
        const double angle = kTwoPi * static_cast<double>(k * i % m_) / static_cast<double>(m_);
        c += samples[i] * std::cos(angle);
        s += samples[i] * std::sin(angle);
      }
      const bool edge = k == 0 || (m_ % 2 == 0 && k == half);
      cos_[k] = (edge ? 1.0 : 2.0) * c / static_cast<double>(m_);
      sin_[k] = edge ? 0.0 : 2.0 * s / static_cast<double>(m_);
    }
  }

  // Value and first two derivatives.
  std::array<double, 3> operator()(double theta) const {
    std::array<double, 3> out{0.0, 0.0, 0.0};
    for (std::size_t k = 0; k < cos_.size(); ++k) {
      const double kk = static_cast<double>(k);
      const double c = std::cos(kk * theta);
      const double s = std::sin(kk * theta);
      out[0] += cos_[k] * c + sin_[k] * s;
      out[1] += kk * (-cos_[k] * s + sin_[k] * c);
      out[2] += -kk * kk * (cos_[k] * c + sin_[k] * s);
    }
    return out;
  }

 private:
  std::size_t m_;
  std::vector<double> cos_;
  std::vector<double> sin_;
};

double circular_distance(double a, double b) {
  const double d = std::fmod(std::abs(a - b), kTwoPi);
  return std::min(d, kTwoPi - d);
}

// Taylor coefficients c_0..c_{2K} of t -> V(p + t n) from 2K+1 samples at spacing eps.
Eigen::VectorXd taylor_coefficients(const Expr& V, std::span<const double> p, std::span<const double> n, int K,
                                    double eps) {
  const int size = 2 * K + 1;
  Eigen::MatrixXd vander(size, size);
  Eigen::VectorXd values(size);
  for (int r = 0; r < size; ++r) {
    const double k = r - K;
    for (int c = 0; c < size; ++c) vander(r, c) = std::pow(k, c);
    values(r) = V({p[0] + k * eps * n[0], p[1] + k * eps * n[1]});
  }
  Eigen::VectorXd scaled = vander.fullPivLu().solve(values);
  for (int c = 0; c < size; ++c) scaled(c) /= std::pow(eps, c);
  return scaled;
}

}  // namespace

Curve build_gamma(const Expr& x_of_theta, const Expr& y_of_theta, int orientation, int samples) {
  if (x_of_theta.arity() != 1 || y_of_theta.arity() != 1) {
    throw Error(ErrorCode::InvalidParameter, "curve coordinates must be expressions in one parameter");
  }
  if (orientation != 1 && orientation != -1) throw Error(ErrorCode::InvalidParameter, "orientation must be +1 or -1");
  if (samples < 16) throw Error(ErrorCode::InvalidParameter, "at least 16 curve samples are required");

  const Expr dx = x_of_theta.derive(std::size_t{0});
  const Expr dy = y_of_theta.derive(std::size_t{0});
  const Expr ddx = dx.derive(std::size_t{0});
  const Expr ddy = dy.derive(std::size_t{0});

  const double gap = std::hypot(x_of_theta({kTwoPi}) - x_of_theta({0.0}), y_of_theta({kTwoPi}) - y_of_theta({0.0}));
  Curve curve;
  curve.x = x_of_theta;
  curve.y = y_of_theta;
  curve.orientation = orientation;
  double size = 0.0;
  for (int i = 0; i < samples; ++i) {
    CurvePoint p;
    p.theta = kTwoPi * i / samples;
    p.x = x_of_theta({p.theta});
    p.y = y_of_theta({p.theta});
    const double vx = dx({p.theta});
    const double vy = dy({p.theta});
    p.arc = std::hypot(vx, vy);
    if (!(p.arc > 1e-12)) {
      throw Error(ErrorCode::DegenerateParametrization, "|s'(theta)| vanishes at theta = " + num(p.theta));
    }
    p.tx = vx / p.arc;
    p.ty = vy / p.arc;
    p.nx = orientation * p.ty;
    p.ny = -orientation * p.tx;
    p.curvature = cross(vx, vy, ddx({p.theta}), ddy({p.theta})) / (p.arc * p.arc * p.arc);
    size = std::max({size, std::abs(p.x), std::abs(p.y)});
    curve.points.push_back(p);
  }
  if (gap > 1e-9 * (1.0 + size)) throw Error(ErrorCode::DegenerateParametrization, "curve is not closed");

  const double tol = 1e-12 * (1.0 + size * size);
  const std::size_t m = curve.points.size();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 2; j < m; ++j) {
      if (i == 0 && j == m - 1) continue;  // neighbours across the seam
      if (segments_meet(curve.points[i], curve.points[(i + 1) % m], curve.points[j], curve.points[(j + 1) % m], tol)) {
        throw Error(ErrorCode::DegenerateParametrization,
                    "curve self-intersects near theta = " + num(curve.points[i].theta) + " and " +
                        num(curve.points[j].theta));
      }
    }
  }
  return curve;
}

double extract_f(const Expr& V, int m, std::span<const double> point, std::span<const double> normal, double step) {
  if (V.arity() != 2 || point.size() != 2 || normal.size() != 2) {
    throw Error(ErrorCode::InvalidParameter, "extract_f works in two ambient dimensions");
  }
  if (m < 1) throw Error(ErrorCode::InvalidParameter, "m must be at least 1");
  if (!(step > 0.0)) throw Error(ErrorCode::InvalidParameter, "step must be positive");
  const int K = m + 2;
  const Eigen::VectorXd coarse = taylor_coefficients(V, point, normal, K, step);
  const Eigen::VectorXd fine = taylor_coefficients(V, point, normal, K, 0.5 * step);
  // Symmetric stencils: the error of c_{2m} is even in the step, leading power 2K + 2 - 2m.
  const double f = richardson(coarse(2 * m), fine(2 * m), 2 * K + 2 - 2 * m).value;

  const double h = 0.5 * step;
  const double lead = std::abs(fine(2 * m)) * std::pow(h, 2 * m);
  for (int i = 0; i < 2 * m; ++i) {
    if (std::abs(fine(i)) * std::pow(h, i) > 1e-6 * lead + 1e-13) {
      throw Error(ErrorCode::OrderMismatch, "V has a non-vanishing normal derivative of order " + std::to_string(i));
    }
  }
  double higher = 0.0;
  for (int i = 2 * m + 1; i <= 2 * K; ++i) higher = std::max(higher, std::abs(fine(i)) * std::pow(h, i));
  if (!(f > 0.0) || lead < 1e-6 * higher) {
    throw Error(ErrorCode::OrderMismatch, "V does not vanish to order exactly " + std::to_string(2 * m));
  }
  return f;
}

MinimaResult find_minima(std::span<const double> f, std::span<const double> arc) {
  const std::size_t M = f.size();
  if (M < 8 || arc.size() != M) throw Error(ErrorCode::InvalidParameter, "need at least 8 matching samples");
  const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
  const double scale = std::max(1.0, std::abs(*hi));
  if (*hi - *lo <= 1e-9 * scale) throw Error(ErrorCode::ContinuumOfMinima, "f is constant along the curve");

  const TrigInterpolant fi(f);
  const TrigInterpolant ai(arc);
  const double dtheta = kTwoPi / static_cast<double>(M);

  struct Candidate {
    double theta, value, d2;
  };
  std::vector<Candidate> found;
  for (std::size_t i = 0; i < M; ++i) {
    const double prev = f[(i + M - 1) % M];
    const double next = f[(i + 1) % M];
    if (!(f[i] <= prev && f[i] <= next)) continue;
    // A run of equal samples is a plateau, not an isolated minimum.
    std::size_t run = 1;
    while (run < M && std::abs(f[(i + run) % M] - f[i]) <= 1e-10 * scale) ++run;
    if (run >= 4) throw Error(ErrorCode::ContinuumOfMinima, "f has a plateau of minima");

    double theta = dtheta * static_cast<double>(i);
    for (int it = 0; it < 60; ++it) {
      const auto d = fi(theta);
      if (!(d[2] > 0.0)) break;
      const double delta = std::clamp(-d[1] / d[2], -dtheta, dtheta);
      theta += delta;
      if (std::abs(delta) < 1e-14) break;
    }
    theta = std::fmod(theta + kTwoPi, kTwoPi);
    const auto d = fi(theta);
    found.push_back({theta, d[0], d[2]});
  }

  MinimaResult out;
  out.eta0 = std::numeric_limits<double>::infinity();
  for (const auto& c : found) out.eta0 = std::min(out.eta0, c.value);
  const double tol = 1e-8 * std::max(1.0, std::abs(out.eta0));
  for (const auto& c : found) {
    if (c.value > out.eta0 + tol) continue;
    const bool duplicate = std::any_of(out.minima.begin(), out.minima.end(), [&](const SurfaceMinimum& s) {
      return circular_distance(s.theta, c.theta) < 1e-6;
    });
    if (duplicate) continue;
    const double a = ai(c.theta)[0];
    SurfaceMinimum s;
    s.theta = c.theta;
    s.f = c.value;
    s.rho2 = 0.5 * c.d2 / (a * a);
    if (!(s.rho2 > 1e-8)) {
      throw Error(ErrorCode::DegenerateMinimum, "minimum at theta = " + num(c.theta) + " has rho^2 = " + num(s.rho2));
    }
    s.rho = std::sqrt(s.rho2);
    s.trplus = s.rho;
    out.minima.push_back(s);
  }
  std::sort(out.minima.begin(), out.minima.end(),
            [](const SurfaceMinimum& l, const SurfaceMinimum& r) { return l.theta < r.theta; });
  return out;
}

SurfaceWell make_surface_well(const Expr& V, int m, Curve gamma) {
  if (V.arity() != 2) throw Error(ErrorCode::InvalidParameter, "V must have two variables");
  if (m < 1) throw Error(ErrorCode::InvalidParameter, "m must be at least 1");
  SurfaceWell well;
  well.V = V;
  well.m = m;
  std::vector<double> arc;
  for (const CurvePoint& p : gamma.points) {
    const double v = V({p.x, p.y});
    if (std::abs(v) > 1e-10) {
      throw Error(ErrorCode::OrderMismatch, "V does not vanish on the curve at theta = " + num(p.theta));
    }
    const double radius = std::abs(p.curvature) > 0.0 ? 1.0 / std::abs(p.curvature) : 1.0;
    const std::array<double, 2> point{p.x, p.y};
    const std::array<double, 2> normal{p.nx, p.ny};
    well.f_samples.push_back(extract_f(V, m, point, normal, 0.02 * std::min(radius, 1.0)));
    arc.push_back(p.arc);
  }
  MinimaResult mins = find_minima(well.f_samples, arc);
  well.eta0 = mins.eta0;
  well.minima = std::move(mins.minima);
  well.gamma = std::move(gamma);
  return well;
}

double surface_coefficient(const SurfaceWell& well, int alpha, int ell) {
  if (ell < 1 || static_cast<std::size_t>(ell) > well.minima.size()) {
    throw Error(ErrorCode::InvalidParameter, "minimum index ell out of range");
  }
  if (alpha < 0) throw Error(ErrorCode::InvalidParameter, "alpha must be non-negative");
  const SurfaceMinimum& s = well.minima[static_cast<std::size_t>(ell - 1)];
  const double m = well.m;
  return (2.0 * alpha * s.rho + s.trplus) / (std::pow(well.eta0, m / (2.0 * m + 2.0)) * std::sqrt(m + 1.0));
}

Prediction predict_surface(const SurfaceWell& well, double mu_j, int j, int alpha, int ell, double h,
                           double gate_factor) {
  if (!(h > 0.0)) throw Error(ErrorCode::InvalidParameter, "h must be positive");
  if (!(mu_j > 0.0)) throw Error(ErrorCode::InvalidParameter, "mu_j must be positive");
  const double m = well.m;
  const double a_coeff = surface_coefficient(well, alpha, ell);
  Prediction p;
  p.regime = Regime::Surface;
  p.j = j;
  p.k = 1;
  p.alpha = alpha;
  p.ell = ell;
  p.mu_j = mu_j;
  p.h = h;
  p.hbar = h;
  p.hbar_j = h / std::sqrt(mu_j);
  p.gates.push_back({"mu_j <= gate_factor * h^(-4m/((m+1)(2m+3)))", mu_j,
                     gate_factor * std::pow(h, -4.0 * m / ((m + 1.0) * (2.0 * m + 3.0))), false});
  if (!p.gates.back().holds()) {
    throw Error(ErrorCode::OutsideValidity, "mu_" + std::to_string(j) + " = " + num(mu_j) +
                                                " exceeds the surface gate " + num(p.gates.back().bound));
  }
  p.value = std::pow(h, 2.0 * m / (m + 1.0)) *
            (std::pow(well.eta0, 1.0 / (m + 1.0)) * mu_j + std::pow(h, 1.0 / (m + 1.0)) * std::sqrt(mu_j) * a_coeff);
  p.remainder_order = 2.0;
  p.remainder_shape = "h^2*mu_j^(2+3/(2m))";
  p.remainder_scale = h * h * std::pow(mu_j, 2.0 + 3.0 / (2.0 * m));
  return p;
}

Grid ambient_grid(const SurfaceWell& well, double h, double energy, const SurfaceNumerics& nm) {
  if (!(nm.points_per_width > 0.0)) throw Error(ErrorCode::InvalidParameter, "points_per_width must be positive");
  const double m = well.m;
  const double width = std::pow(h * h / well.eta0, 1.0 / (2.0 * m + 2.0));
  const double spacing = width / nm.points_per_width;

  double extent = 0.0;
  const auto& pts = well.gamma.points;
  const std::size_t stride = std::max<std::size_t>(1, pts.size() / 64);
  for (std::size_t i = 0; i < pts.size(); i += stride) {
    const CurvePoint& p = pts[i];
    const double sign = p.x * p.nx + p.y * p.ny >= 0.0 ? 1.0 : -1.0;
    const double dx = sign * p.nx;
    const double dy = sign * p.ny;
    const double d = agmon_extent([&](double t) { return well.V({p.x + t * dx, p.y + t * dy}); }, energy, h,
                                  nm.decay_threshold, nm.max_extent);
    extent = std::max({extent, std::abs(p.x + d * dx), std::abs(p.y + d * dy)});
  }
  if (extent > nm.max_extent) throw Error(ErrorCode::ExtentOverflow, "ambient extent exceeds max_extent");
  const int n = points_for_spacing(extent, spacing);
  return Grid({Axis{extent, n}, Axis{extent, n}});
}

std::vector<SurfaceRow> verify_surface(const SurfaceWell& well, std::span<const double> mu, int alpha_max,
                                       std::span<const double> h_list, const SurfaceNumerics& nm,
                                       ResultCache* cache) {
  if (mu.empty()) throw Error(ErrorCode::InvalidParameter, "at least one transverse eigenvalue is required");
  if (alpha_max < 0) throw Error(ErrorCode::InvalidParameter, "alpha_max must be non-negative");
  std::vector<SurfaceRow> rows;
  for (double h : h_list) {
    std::vector<Prediction> preds;
    for (std::size_t j = 0; j < mu.size(); ++j) {
      for (int alpha = 0; alpha <= alpha_max; ++alpha) {
        for (std::size_t ell = 1; ell <= well.minima.size(); ++ell) {
          preds.push_back(predict_surface(well, mu[j], static_cast<int>(j + 1), alpha, static_cast<int>(ell), h,
                                          nm.gate_factor));
        }
      }
    }
    double top = 0.0;
    for (const auto& p : preds) top = std::max(top, p.value);
    const Grid coarse = ambient_grid(well, h, 1.5 * top, nm);

    IterativeOptions opts;
    opts.tolerance = nm.tolerance;
    opts.seed = nm.seed;
    opts.guard = nm.guard;
    opts.store_vectors = false;
    // Half the leading term lies safely below the lowest eigenvalue.
    opts.shift = 0.5 * std::pow(h, 2.0 * well.m / (well.m + 1.0)) * std::pow(well.eta0, 1.0 / (well.m + 1.0)) * mu[0];
    const int count = static_cast<int>(preds.size()) + 2;
    auto solve = [&](const Grid& grid) {
      const DiscreteOperator op = assemble_ambient(well.V, h, grid, nm.order, nm.dimension_cap);
      return memoize(cache, op.description() + "|k=" + std::to_string(count) + "|" + describe(opts),
                     [&] { return iterative_lowest(op, count, opts); });
    };
    const EigenResult rc = solve(coarse);
    const EigenResult rf = solve(coarse.refined());
    std::vector<Extrapolated> levels;
    for (std::size_t i = 0; i < std::min(rc.size(), rf.size()); ++i) {
      levels.push_back(richardson(rc.eigenvalues[i], rf.eigenvalues[i], nm.order));
    }

    std::vector<bool> used(levels.size(), false);
    const double tie = 1e-12 * std::max(1.0, top);
    for (const Prediction& p : preds) {
      std::size_t best = levels.size();
      std::size_t second = levels.size();
      for (std::size_t i = 0; i < levels.size(); ++i) {
        if (used[i]) continue;
        const double d = std::abs(levels[i].value - p.value);
        if (best == levels.size() || d < std::abs(levels[best].value - p.value)) {
          second = best;
          best = i;
        } else if (second == levels.size() || d < std::abs(levels[second].value - p.value)) {
          second = i;
        }
      }
      if (best == levels.size()) throw Error(ErrorCode::MatchAmbiguity, "more predictions than eigenvalues");
      if (second != levels.size()) {
        const double d1 = std::abs(levels[best].value - p.value);
        const double d2 = std::abs(levels[second].value - p.value);
        if (d2 - d1 <= tie && std::abs(levels[best].value - levels[second].value) > 1e3 * tie) {
          throw Error(ErrorCode::MatchAmbiguity, "prediction " + num(p.value) + " is equidistant from two eigenvalues");
        }
      }
      used[best] = true;
      SurfaceRow row;
      row.prediction = p;
      row.theta_min = well.minima[static_cast<std::size_t>(p.ell - 1)].theta;
      row.computed = levels[best].value;
      row.budget = levels[best].budget;
      row.error = row.computed - p.value;
      row.eigen_index = best;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace bolab
