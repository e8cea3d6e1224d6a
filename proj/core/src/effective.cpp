#include "bolab/effective.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

#include <Eigen/Eigenvalues>

#include "bolab/cache.hpp"
#include "bolab/error.hpp"
#include "bolab/richardson.hpp"
#include "bolab/transverse.hpp"

namespace bolab {

namespace {

constexpr double kMinOverlap = 0.5;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Eigen::VectorXd hessian_eigenvalues(const Eigen::MatrixXd& hess) {
  if (hess.rows() == 0 || hess.rows() != hess.cols()) {
    throw Error(ErrorCode::DegenerateHessian, "Hessian must be a non-empty square matrix");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 1e-12) {
    throw Error(ErrorCode::DegenerateHessian, "Hessian has eigenvalue " + num(es.eigenvalues().minCoeff()));
  }
  return es.eigenvalues();
}

void check_band(std::span<const double> mu, int j) {
  if (j < 1 || static_cast<std::size_t>(j) > mu.size()) {
    throw Error(ErrorCode::InvalidParameter, "band index j = " + std::to_string(j) + " has no mu_j");
  }
}

Grid x_subgrid(const Grid& fibered, int n) {
  std::vector<Axis> axes(fibered.axes().begin(), fibered.axes().begin() + n);
  return Grid(std::move(axes));
}

IterativeOptions solver_options(const FiberedNumerics& nm, double shift, bool vectors) {
  IterativeOptions o;
  o.tolerance = nm.tolerance;
  o.seed = nm.seed;
  o.shift = shift;
  o.guard = nm.guard;
  o.inner = nm.inner;
  o.store_vectors = vectors;
  return o;
}

EigenResult solve_cached(const DiscreteOperator& op, int count, const IterativeOptions& opts, ResultCache* cache) {
  const int k = std::min<int>(count, static_cast<int>(op.dimension()));
  return memoize(cache, op.description() + "|k=" + std::to_string(k) + "|" + describe(opts),
                 [&] { return iterative_lowest(op, k, opts); });
}

TwoGridLevels extrapolate(const std::vector<double>& coarse, const std::vector<double>& fine, int order,
                          const Grid& grid) {
  TwoGridLevels out;
  out.grid = grid;
  out.coarse = coarse;
  out.fine = fine;
  const std::size_t n = std::min(coarse.size(), fine.size());
  for (std::size_t i = 0; i < n; ++i) {
    const Extrapolated e = richardson(coarse[i], fine[i], order);
    out.value.push_back(e.value);
    out.budget.push_back(e.budget);
  }
  return out;
}

// Raw eigenvalues nearest `shift` on the coarse grid and its refinement.
std::pair<std::vector<double>, std::vector<double>> full_near(const ModelSpec& model,
                                                              const SemiclassicalParams& params, const Grid& coarse,
                                                              int count, double shift, const FiberedNumerics& nm,
                                                              ResultCache* cache) {
  const IterativeOptions opts = solver_options(nm, shift, false);
  const DiscreteOperator op_c = assemble_fibered(model, params, coarse, nm.order, nm.dimension_cap);
  std::vector<double> c = solve_cached(op_c, count, opts, cache).eigenvalues;
  const DiscreteOperator op_f = assemble_fibered(model, params, coarse.refined(), nm.order, nm.dimension_cap);
  std::vector<double> f = solve_cached(op_f, count, opts, cache).eigenvalues;
  return {std::move(c), std::move(f)};
}

std::vector<double> inside(const std::vector<double>& values, double low, double high) {
  std::vector<double> out;
  for (double v : values) {
    if (v > low && v < high) out.push_back(v);
  }
  return out;
}

// Reduced levels of one band inside (low, high), growing the request until
// the top computed level clears the window.
std::pair<std::vector<double>, TwoGridLevels> reduced_in_window(const ModelSpec& model,
                                                                const SemiclassicalParams& params, double mu_j,
                                                                const Grid& coarse, int initial, double low,
                                                                double high, const FiberedNumerics& nm,
                                                                ResultCache* cache) {
  const std::size_t x_dim = x_subgrid(coarse, model.n).size();
  int count = std::max(initial, 2);
  for (;;) {
    TwoGridLevels r = reduced_lowest(model, params, mu_j, coarse, count, nm, cache);
    const bool cleared = !r.fine.empty() && r.fine.back() >= high;
    if (cleared || static_cast<std::size_t>(count) >= x_dim) {
      std::vector<double> in = inside(r.fine, low, high);
      return {std::move(in), std::move(r)};
    }
    count = std::min<int>(2 * count, static_cast<int>(x_dim));
  }
}

double interpolate(const Eigen::VectorXd& samples, const Axis& axis, double t) {
  const double pos = (t + axis.half_extent) / axis.spacing();
  if (pos <= 0.0 || pos >= axis.points - 1) return 0.0;
  const int i = static_cast<int>(pos);
  const double w = pos - i;
  return (1.0 - w) * samples(i) + w * samples(i + 1);
}

}  // namespace

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::Low: return "low";
    case Regime::Reduced: return "reduced";
    case Regime::Middle: return "middle";
    case Regime::Surface: return "surface";
  }
  return "unknown";
}

bool Prediction::valid() const {
  return std::all_of(gates.begin(), gates.end(), [](const Gate& g) { return g.holds(); }) && std::isfinite(value);
}

std::string Prediction::validity() const {
  std::string out;
  for (const Gate& g : gates) {
    if (!out.empty()) out += "; ";
    out += g.name;
  }
  return out;
}

std::vector<double> harmonic_levels(const Eigen::MatrixXd& hess, double mu_j, double a, int k_max) {
  if (k_max < 1) throw Error(ErrorCode::InvalidParameter, "k_max must be at least 1");
  if (!(mu_j > 0.0) || !(a > 0.0)) throw Error(ErrorCode::InvalidParameter, "mu_j and a must be positive");
  const Eigen::VectorXd q = hessian_eigenvalues(hess);
  const Eigen::Index n = q.size();
  std::vector<double> omega(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) omega[i] = std::sqrt(mu_j * q(i) / (2.0 + a));

  // Level k_max never needs alpha_i >= k_max, so the box [0, k_max)^n suffices.
  std::vector<double> levels;
  std::vector<int> alpha(static_cast<std::size_t>(n), 0);
  for (;;) {
    double e = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) e += (2.0 * alpha[i] + 1.0) * omega[i];
    levels.push_back(e);
    Eigen::Index d = n - 1;
    while (d >= 0 && ++alpha[d] == k_max) alpha[d--] = 0;
    if (d < 0) break;
  }
  std::sort(levels.begin(), levels.end());
  levels.resize(static_cast<std::size_t>(k_max));
  return levels;
}

double ground_coefficient(const Eigen::MatrixXd& hess, double mu_j, double a) {
  hessian_eigenvalues(hess);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess);
  return std::sqrt(mu_j / (2.0 + a)) * es.operatorSqrt().trace();
}

DiscreteOperator reduced_operator(const ModelSpec& model, const SemiclassicalParams& params, double mu_j,
                                  const Grid& grid, int order, std::size_t dimension_cap) {
  if (grid.dimension() != static_cast<std::size_t>(model.n)) {
    throw Error(ErrorCode::InvalidParameter, "reduced grid must have n axes");
  }
  const double power = 2.0 / (2.0 + model.a);
  const double w = params.hbar * params.hbar;
  std::string desc = "reduced;f=" + model.f.to_string() + ";a=" + num(model.a) + ";mu=" + num(mu_j) +
                     ";hbar=" + num(params.hbar) + ";grid=" + grid.describe() + ";order=" + std::to_string(order);
  return assemble(grid, order, std::vector<double>(grid.dimension(), w),
                  [&](std::span<const double> x) { return mu_j * std::pow(model.f.eval(x), power); },
                  std::move(desc), dimension_cap);
}

Prediction predict_low(const ModelSpec& model, const SemiclassicalParams& params, std::span<const double> mu, int j,
                       int k) {
  check_band(mu, j);
  if (k < 1) throw Error(ErrorCode::InvalidParameter, "k must be at least 1");
  const double mu_j = mu[static_cast<std::size_t>(j - 1)];
  Prediction p;
  p.regime = Regime::Low;
  p.j = j;
  p.k = k;
  p.mu_j = mu_j;
  p.h = params.h;
  p.hbar = params.hbar;
  p.hbar_j = params.hbar / std::sqrt(mu_j);
  p.gates.push_back({"mu_j < essential floor", mu_j, essential_floor(model, mu[0]), true});
  if (!p.gates.back().holds()) {
    throw Error(ErrorCode::OutsideValidity, "mu_" + std::to_string(j) + " = " + num(mu_j) +
                                                " is not below the essential floor " + num(p.gates.back().bound));
  }
  p.value = mu_j + params.hbar * harmonic_levels(model.hess_f0, mu_j, model.a, k).back();
  p.remainder_order = k == 1 ? 2.0 : 1.5;
  p.remainder_shape = k == 1 ? "hbar^2" : "hbar^(3/2)";
  p.remainder_scale = std::pow(params.hbar, p.remainder_order);
  return p;
}

Prediction predict_middle(const ModelSpec& model, const SemiclassicalParams& params, std::span<const double> mu,
                          int j) {
  check_band(mu, j);
  const double mu_j = mu[static_cast<std::size_t>(j - 1)];
  Prediction p;
  p.regime = Regime::Middle;
  p.j = j;
  p.k = 1;
  p.mu_j = mu_j;
  p.h = params.h;
  p.hbar = params.hbar;
  p.hbar_j = params.hbar / std::sqrt(mu_j);
  p.gates = {
      {"a >= 2", 2.0, model.a, false},
      {"f_infinity = infinity", std::isinf(model.f_infinity) ? 0.0 : 1.0, 0.0, false},
      {"mu_j <= hbar^-2", mu_j, 1.0 / (params.hbar * params.hbar), false},
  };
  for (const Gate& g : p.gates) {
    if (!g.holds()) throw Error(ErrorCode::OutsideValidity, "middle-energy gate violated: " + g.name);
  }
  p.value = mu_j + params.hbar * harmonic_levels(model.hess_f0, mu_j, model.a, 1).front();
  p.remainder_order = 0.0;
  p.remainder_shape = "C*mu_j*hbar^2";
  p.remainder_scale = mu_j * params.hbar * params.hbar;
  return p;
}

Grid fibered_grid(const ModelSpec& model, const SemiclassicalParams& params, std::span<const double> mu, int k_max,
                  const FiberedNumerics& nm) {
  if (mu.empty()) throw Error(ErrorCode::InvalidParameter, "at least one band is required");
  if (!(nm.points_per_width > 0.0) || !(nm.y_resolution > 0.0)) {
    throw Error(ErrorCode::InvalidParameter, "grid resolution parameters must be positive");
  }
  const std::vector<double> extent =
      choose_extent(model, params, mu, static_cast<int>(mu.size()), k_max, nm.extent);
  const Eigen::VectorXd q = hessian_eigenvalues(model.hess_f0);
  const double mu_hi = *std::max_element(mu.begin(), mu.end());
  const double width =
      std::pow(params.hbar * params.hbar * (2.0 + model.a) / (mu_hi * q.maxCoeff()), 0.25);
  const double dx = std::min(width / nm.points_per_width, 0.125 * *std::min_element(extent.begin(), extent.end() - 1));
  const double e_top = harmonic_levels(model.hess_f0, 1.0, model.a, k_max).back();
  double top = 0.0;
  for (double m : mu) top = std::max(top, m + params.hbar * std::sqrt(m) * e_top);
  const double dy = nm.y_resolution / std::sqrt(std::max(top, 1.0));

  std::vector<Axis> axes;
  for (int i = 0; i < model.n; ++i) axes.push_back(Axis{extent[i], points_for_spacing(extent[i], dx)});
  axes.push_back(Axis{extent.back(), points_for_spacing(extent.back(), dy)});
  return Grid(std::move(axes));
}

TwoGridLevels full_lowest(const ModelSpec& model, const SemiclassicalParams& params, const Grid& coarse, int count,
                          double floor, const FiberedNumerics& nm, ResultCache* cache) {
  auto [c, f] = full_near(model, params, coarse, count, floor, nm, cache);
  return extrapolate(c, f, nm.order, coarse);
}

TwoGridLevels reduced_lowest(const ModelSpec& model, const SemiclassicalParams& params, double mu_j,
                             const Grid& coarse, int count, const FiberedNumerics& nm, ResultCache* cache) {
  const Grid xc = x_subgrid(coarse, model.n);
  // The reduced operator is bounded below by mu_j, which makes a good shift.
  const IterativeOptions opts = solver_options(nm, mu_j, false);
  const DiscreteOperator op_c = reduced_operator(model, params, mu_j, xc, nm.order, nm.dimension_cap);
  const DiscreteOperator op_f = reduced_operator(model, params, mu_j, xc.refined(), nm.order, nm.dimension_cap);
  const std::vector<double> c = solve_cached(op_c, count, opts, cache).eigenvalues;
  const std::vector<double> f = solve_cached(op_f, count, opts, cache).eigenvalues;
  return extrapolate(c, f, nm.order, coarse);
}

BandComparison compare_band(const ModelSpec& model, const SemiclassicalParams& params, std::span<const double> mu,
                            int j, int k_max, const FiberedNumerics& nm, ResultCache* cache) {
  check_band(mu, j);
  if (static_cast<std::size_t>(j) >= mu.size()) {
    throw Error(ErrorCode::InvalidParameter, "band assignment for j needs mu_{j+1}");
  }
  if (k_max < 1) throw Error(ErrorCode::InvalidParameter, "k_max must be at least 1");
  const std::size_t jj = static_cast<std::size_t>(j - 1);
  const double mu_j = mu[jj];
  BandComparison out;
  out.j = j;
  out.window_low = j == 1 ? -std::numeric_limits<double>::infinity() : mu_j - 0.5 * (mu_j - mu[jj - 1]);
  out.window_high = mu_j + 0.5 * (mu[jj + 1] - mu_j);

  // Harmonic estimate of how many band-j levels fall inside the window.
  int k_est = k_max;
  for (;;) {
    const double e = harmonic_levels(model.hess_f0, mu_j, model.a, k_est + 1).back();
    if (mu_j + params.hbar * e >= out.window_high || k_est > 400) break;
    ++k_est;
  }
  const Grid coarse = fibered_grid(model, params, mu.first(static_cast<std::size_t>(j)), k_est + 1, nm);

  auto [band, reduced] =
      reduced_in_window(model, params, mu_j, coarse, k_est + 2, out.window_low, out.window_high, nm, cache);
  if (band.size() < static_cast<std::size_t>(k_max)) {
    throw Error(ErrorCode::ClusterAmbiguity, "band " + std::to_string(j) + " has only " +
                                                 std::to_string(band.size()) + " reduced levels within half a gap");
  }

  // Every band below the window top contributes levels to it.
  std::size_t expected = 0;
  for (std::size_t i = 0; i < mu.size() && mu[i] < out.window_high; ++i) {
    if (i == jj) {
      expected += band.size();
    } else {
      expected += reduced_in_window(model, params, mu[i], coarse, k_est + 2, out.window_low, out.window_high, nm,
                                    cache)
                      .first.size();
    }
  }
  const int request = static_cast<int>(expected) + 2;
  const double shift = j == 1 ? mu[0] : 0.5 * (out.window_low + out.window_high);
  auto [fc, ff] = full_near(model, params, coarse, request, shift, nm, cache);
  const std::vector<double> in_c = inside(fc, out.window_low, out.window_high);
  const std::vector<double> in_f = inside(ff, out.window_low, out.window_high);
  const bool saturated = in_f.size() == ff.size();
  if (in_c.size() != band.size() || in_f.size() != band.size() || saturated) {
    throw Error(ErrorCode::ClusterAmbiguity,
                "window around mu_" + std::to_string(j) + " holds " + std::to_string(in_f.size()) +
                    (saturated ? "+" : "") + " full eigenvalues but " + std::to_string(band.size()) +
                    " reduced band levels");
  }
  const TwoGridLevels full = extrapolate(in_c, in_f, nm.order, coarse);
  out.full = full.value;
  out.full_budget = full.budget;
  const std::size_t first = static_cast<std::size_t>(
      std::count_if(reduced.fine.begin(), reduced.fine.end(), [&](double v) { return v <= out.window_low; }));
  out.reduced.assign(reduced.value.begin() + first, reduced.value.begin() + first + band.size());
  out.reduced_budget.assign(reduced.budget.begin() + first, reduced.budget.begin() + first + band.size());
  return out;
}

ReducedError reduced_vs_full_error(const ModelSpec& model, const SemiclassicalParams& params,
                                   std::span<const double> mu, int j, int k, const FiberedNumerics& nm,
                                   ResultCache* cache) {
  const BandComparison b = compare_band(model, params, mu, j, k, nm, cache);
  const std::size_t i = static_cast<std::size_t>(k - 1);
  ReducedError out;
  out.full = b.full[i];
  out.reduced = b.reduced[i];
  out.error = out.full - out.reduced;
  out.budget = b.full_budget[i] + b.reduced_budget[i];
  return out;
}

BandLevel band_ground_level(const ModelSpec& model, const SemiclassicalParams& params,
                            const TransverseSpectrum& spectrum, int j, double target, int nearest,
                            const FiberedNumerics& nm, ResultCache* cache) {
  check_band(spectrum.mu, j);
  if (nearest < 1) throw Error(ErrorCode::InvalidParameter, "nearest must be at least 1");
  const double mu_j = spectrum.mu[static_cast<std::size_t>(j - 1)];
  const std::array<double, 1> band{mu_j};
  const Grid coarse = fibered_grid(model, params, band, 1, nm);
  const Eigen::VectorXd phi_j = spectrum.phi.col(j - 1);
  const Axis& t_axis = spectrum.grid.axis(0);
  const double scale_power = 1.0 / (2.0 + model.a);

  auto level_on = [&](const Grid& grid) {
    const DiscreteOperator op = assemble_fibered(model, params, grid, nm.order, nm.dimension_cap);
    const IterativeOptions opts = solver_options(nm, target, true);
    const std::string key = op.description() + "|k=" + std::to_string(nearest) + "|" + describe(opts) +
                            "|band-overlap;j=" + std::to_string(j) + ";g=" + spectrum.g.to_string() +
                            ";tgrid=" + spectrum.grid.describe();
    return memoize(cache, key, [&] {
      const EigenResult r = iterative_lowest(op, nearest, opts);

      const Grid xg = x_subgrid(grid, model.n);
      IterativeOptions ropts = solver_options(nm, mu_j, true);
      const EigenResult psi = iterative_lowest(reduced_operator(model, params, mu_j, xg, nm.order), 1, ropts);
      const Axis& y_axis = grid.axis(static_cast<std::size_t>(model.n));
      const std::size_t ny = static_cast<std::size_t>(y_axis.points);
      Eigen::VectorXd u(static_cast<Eigen::Index>(grid.size()));
      std::vector<double> x(static_cast<std::size_t>(model.n));
      for (std::size_t xi = 0; xi < xg.size(); ++xi) {
        for (int d = 0; d < model.n; ++d) x[d] = xg.coordinate(xi, static_cast<std::size_t>(d));
        const double s = std::pow(model.f.eval(x), scale_power);
        const double amp = psi.vectors(static_cast<Eigen::Index>(xi), 0) * std::sqrt(s);
        for (std::size_t yi = 0; yi < ny; ++yi) {
          u(static_cast<Eigen::Index>(xi * ny + yi)) =
              amp * interpolate(phi_j, t_axis, s * y_axis.coordinate(static_cast<int>(yi)));
        }
      }
      u.normalize();

      Eigen::Index best = 0;
      double best_overlap = -1.0;
      for (Eigen::Index c = 0; c < r.vectors.cols(); ++c) {
        const double o = std::pow(r.vectors.col(c).dot(u), 2) / r.vectors.col(c).squaredNorm();
        if (o > best_overlap) {
          best_overlap = o;
          best = c;
        }
      }
      EigenResult out;
      out.eigenvalues = {r.eigenvalues[static_cast<std::size_t>(best)], best_overlap};
      out.residuals = {r.residuals[static_cast<std::size_t>(best)], 0.0};
      out.info = r.info;
      out.info.method += "+overlap";
      return out;
    });
  };

  const EigenResult c = level_on(coarse);
  const EigenResult f = level_on(coarse.refined());
  const double overlap = std::min(c.eigenvalues[1], f.eigenvalues[1]);
  if (overlap < kMinOverlap) {
    throw Error(ErrorCode::ClusterAmbiguity, "band " + std::to_string(j) + " ground state has squared overlap " +
                                                 num(overlap) + " with the product state near " + num(target));
  }
  const Extrapolated e = richardson(c.eigenvalues[0], f.eigenvalues[0], nm.order);
  return {e.value, e.budget, e.coarse, e.fine, f.eigenvalues[1]};
}

}  // namespace bolab
