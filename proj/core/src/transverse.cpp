#include "bolab/transverse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SparseLU>

#include "bolab/cache.hpp"
#include "bolab/discretize.hpp"
#include "bolab/eigensolve.hpp"
#include "bolab/error.hpp"
#include "bolab/model.hpp"
#include "bolab/richardson.hpp"

namespace bolab {

namespace {

constexpr int kRoughIntervals = 400;
constexpr double kParityTolerance = 1e-6;

EigenResult solve_lowest(const DiscreteOperator& op, int k, bool vectors, std::uint64_t seed, ResultCache* cache) {
  // Residuals cannot drop much below eps * ||A||; fine grids have large norms.
  Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(op.matrix().rows());
  for (int r = 0; r < op.matrix().outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(op.matrix(), r); it; ++it) row_sums(r) += std::abs(it.value());
  }
  IterativeOptions opts;
  opts.tolerance = std::max(1e-10, 1e-13 * row_sums.maxCoeff());
  opts.seed = seed;
  opts.shift = -1.0;
  opts.store_vectors = vectors;
  return memoize(cache, op.description() + "|k=" + std::to_string(k) + "|" + describe(opts),
                 [&] { return iterative_lowest(op, k, opts); });
}

bool is_even(const Expr& g, const Grid& grid) {
  const Axis& ax = grid.axis(0);
  for (int i = 0; i < ax.points; ++i) {
    const double t = ax.coordinate(i);
    const double l = g({t});
    const double r = g({-t});
    if (std::abs(l - r) > 1e-12 * (1.0 + std::abs(l))) return false;
  }
  return true;
}

// Half-extent covering the first j_max eigenfunctions of D^2 + g.
double transverse_extent(const Expr& g, int j_max, const TransverseOptions& o, std::uint64_t seed) {
  double extent = o.min_extent;
  for (int pass = 0; pass < 6; ++pass) {
    const Grid rough({Axis{extent, kRoughIntervals + 1}});
    const EigenResult r = solve_lowest(assemble_1d(g, rough, 1.0, 2), j_max, false, seed, nullptr);
    const double top = 1.05 * std::max(r.eigenvalues.back(), 0.0) + 1e-3;
    double needed = std::max(o.min_extent, transverse_threshold_extent(g, top, o.max_extent));
    for (double dir : {-1.0, 1.0}) {
      needed = std::max(needed, agmon_extent([&](double t) { return g({dir * t}); }, top, 1.0,
                                             o.decay_threshold, o.max_extent));
    }
    if (needed <= extent) return extent;
    extent = std::min(needed * 1.05, o.max_extent);
  }
  return extent;
}

void orient(Eigen::Ref<Eigen::VectorXd> v) {
  const double peak = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-3 * peak) {
      if (v(i) < 0.0) v = -v;
      return;
    }
  }
}

int parity_of(const Eigen::VectorXd& v) {
  const Eigen::VectorXd rev = v.reverse();
  const double peak = v.cwiseAbs().maxCoeff();
  if ((v - rev).cwiseAbs().maxCoeff() <= kParityTolerance * peak) return 1;
  if ((v + rev).cwiseAbs().maxCoeff() <= kParityTolerance * peak) return -1;
  return 0;
}

void check_index(const TransverseSpectrum& spec, int j) {
  if (j < 1 || static_cast<std::size_t>(j) > spec.size()) {
    throw Error(ErrorCode::InvalidParameter, "transverse index j out of range");
  }
}

}  // namespace

Eigen::VectorXd TransverseSpectrum::coordinates() const {
  const Axis& ax = grid.axis(0);
  Eigen::VectorXd t(ax.points);
  for (int i = 0; i < ax.points; ++i) t(i) = ax.coordinate(i);
  return t;
}

double TransverseSpectrum::min_gap() const {
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < mu.size(); ++i) gap = std::min(gap, mu[i] - mu[i - 1]);
  return gap;
}

TransverseSpectrum transverse_spectrum(const Expr& g, double a, int j_max, const TransverseOptions& o,
                                       ResultCache* cache) {
  if (j_max < 1) throw Error(ErrorCode::InvalidParameter, "j_max must be at least 1");
  if (g.arity() != 1) throw Error(ErrorCode::InvalidParameter, "g must have exactly one variable");
  if (o.order != 2 && o.order != 4) throw Error(ErrorCode::InvalidParameter, "stencil order must be 2 or 4");
  if (!(o.resolution > 0.0) || !(o.tolerance > 0.0)) {
    throw Error(ErrorCode::InvalidParameter, "resolution and tolerance must be positive");
  }

  const double extent = transverse_extent(g, j_max, o, o.seed);
  const Grid rough({Axis{extent, kRoughIntervals + 1}});
  const double mu_top =
      solve_lowest(assemble_1d(g, rough, 1.0, 2), j_max, false, o.seed, nullptr).eigenvalues.back();
  double resolution = o.resolution;

  TransverseSpectrum out;
  out.a = a;
  out.g = g;
  out.order = o.order;
  for (int pass = 0;; ++pass) {
    const double spacing = resolution / std::sqrt(std::max(mu_top, 1.0));
    const Grid coarse({Axis{extent, points_for_spacing(extent, spacing)}});
    const Grid fine = coarse.refined();
    const DiscreteOperator op_fine = assemble_1d(g, fine, 1.0, o.order);
    const EigenResult rc = solve_lowest(assemble_1d(g, coarse, 1.0, o.order), j_max, false, o.seed, cache);
    const EigenResult rf = solve_lowest(op_fine, j_max, true, o.seed, cache);

    out.mu.assign(static_cast<std::size_t>(j_max), 0.0);
    out.budget.assign(static_cast<std::size_t>(j_max), 0.0);
    out.mu_fine = rf.eigenvalues;
    double worst = 0.0;
    for (int j = 0; j < j_max; ++j) {
      const Extrapolated e = richardson(rc.eigenvalues[j], rf.eigenvalues[j], o.order);
      out.mu[j] = e.value;
      out.budget[j] = e.budget;
      worst = std::max(worst, e.budget);
    }
    out.grid = fine;
    out.phi = rf.vectors;
    if (worst <= o.tolerance || pass >= o.max_refinements) break;
    resolution *= 0.5;
  }

  const double dt = out.spacing();
  out.even_potential = is_even(g, out.grid);
  out.parity.assign(static_cast<std::size_t>(j_max), 0);
  for (int j = 0; j < j_max; ++j) {
    auto col = out.phi.col(j);
    col /= std::sqrt(dt * col.squaredNorm());
    orient(col);
    if (out.even_potential) out.parity[j] = parity_of(col);
  }
  return out;
}

double fiber_eigenvalue(double mu_j, double f_at_x, double a) {
  return mu_j * std::pow(f_at_x, 2.0 / (2.0 + a));
}

double essential_floor(const ModelSpec& model, double mu_1) {
  if (std::isinf(model.f_infinity)) return std::numeric_limits<double>::infinity();
  return fiber_eigenvalue(mu_1, model.f_infinity, model.a);
}

double odd_moment(const Eigen::Ref<const Eigen::VectorXd>& phi, const Eigen::Ref<const Eigen::VectorXd>& t, int m) {
  if (phi.size() != t.size() || t.size() < 2) throw Error(ErrorCode::InvalidParameter, "sample size mismatch");
  if (m < 0) throw Error(ErrorCode::InvalidParameter, "m must be non-negative");
  const double dt = t(1) - t(0);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    const double weight = (i == 0 || i + 1 == t.size()) ? 0.5 : 1.0;
    sum += weight * std::pow(t(i), 2 * m + 1) * phi(i) * phi(i);
  }
  return dt * sum;
}

double odd_moment(const TransverseSpectrum& spec, int j, int m) {
  check_index(spec, j);
  return odd_moment(spec.phi.col(j - 1), spec.coordinates(), m);
}

DiscreteOperator transverse_operator(const TransverseSpectrum& spec) {
  return assemble_1d(spec.g, spec.grid, 1.0, spec.order);
}

CorrectorResult corrector_solve(const TransverseSpectrum& spec, int j, int m, double tolerance) {
  check_index(spec, j);
  if (m < 1) throw Error(ErrorCode::InvalidParameter, "m must be at least 1");
  const std::size_t idx = static_cast<std::size_t>(j - 1);
  const double mu_j = spec.mu_fine[idx];
  const double cluster_tol = 1e-8 * std::max(1.0, std::abs(mu_j));
  if ((idx > 0 && mu_j - spec.mu_fine[idx - 1] <= cluster_tol) ||
      (idx + 1 < spec.mu_fine.size() && spec.mu_fine[idx + 1] - mu_j <= cluster_tol)) {
    throw Error(ErrorCode::DegenerateLevel, "mu_" + std::to_string(j) + " is not a simple eigenvalue");
  }

  const DiscreteOperator op = transverse_operator(spec);
  const SparseMatrix& a = op.matrix();
  const double dt = spec.spacing();
  const Eigen::VectorXd t = spec.coordinates();
  const Eigen::VectorXd u = spec.phi.col(j - 1) * std::sqrt(dt);  // Euclidean unit vector
  const double mu = u.dot(a * u);

  const Eigen::VectorXd rhs = t.array().pow(2 * m + 1).matrix().cwiseProduct(spec.phi.col(j - 1));
  const Eigen::VectorXd b = rhs - u.dot(rhs) * u;

  // Bordered system [A - mu, u; u^T, 0] [x; s] = [b; 0]: its solution is the
  // solution on the complement of u, and the border keeps it nonsingular.
  const Eigen::Index n = a.rows();
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(a.nonZeros() + 2 * n + n));
  for (int r = 0; r < a.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(a, r); it; ++it) entries.emplace_back(r, it.col(), it.value());
    entries.emplace_back(r, r, -mu);
    entries.emplace_back(r, n, u(r));
    entries.emplace_back(n, r, u(r));
  }
  Eigen::SparseMatrix<double> k(n + 1, n + 1);
  k.setFromTriplets(entries.begin(), entries.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(k);
  if (lu.info() != Eigen::Success) throw Error(ErrorCode::DegenerateLevel, "bordered corrector system is singular");
  Eigen::VectorXd full_rhs = Eigen::VectorXd::Zero(n + 1);
  full_rhs.head(n) = b;
  Eigen::VectorXd sol = lu.solve(full_rhs);
  int iterations = 1;
  for (; iterations < 4; ++iterations) {  // iterative refinement
    const Eigen::VectorXd r = full_rhs - k * sol;
    if (r.norm() <= tolerance * b.norm()) break;
    sol += lu.solve(r);
  }
  Eigen::VectorXd x = sol.head(n);
  x -= u.dot(x) * u;

  CorrectorResult out;
  out.phi = x;
  out.mu = mu;
  out.iterations = iterations;
  out.residual = (a * x - mu * x - rhs).norm() / rhs.norm();
  out.orthogonality = std::abs(dt * x.dot(spec.phi.col(j - 1)));
  if (!(out.residual <= 1e3 * tolerance)) {
    throw Error(ErrorCode::NoConvergence, "corrector solve reached only relative residual " +
                                              std::to_string(out.residual));
  }
  return out;
}

DilationMoments dilation_moments(const TransverseSpectrum& spec, int j) {
  check_index(spec, j);
  const Eigen::VectorXd t = spec.coordinates();
  const Eigen::VectorXd phi = spec.phi.col(j - 1);
  const double dt = spec.spacing();
  const Eigen::Index n = phi.size();
  double first = 0.0;
  double second = 0.0;
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    const double d1 = (phi(i + 1) - phi(i - 1)) / (2.0 * dt);
    const double d2 = (phi(i + 1) - 2.0 * phi(i) + phi(i - 1)) / (dt * dt);
    const double td = t(i) * d1;
    const double tdtd = td + t(i) * t(i) * d2;
    first += td * td;
    second += tdtd * tdtd;
  }
  return {std::sqrt(dt * first), std::sqrt(dt * second)};
}

}  // namespace bolab
