#include "bolab/discretize.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "bolab/effective.hpp"
#include "bolab/error.hpp"
#include "bolab/model.hpp"

namespace bolab {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Stencil {
  double center;
  std::array<double, 2> off;  // coefficients at distance 1 and 2
  int reach;
};

Stencil stencil_for(int order) {
  if (order == 2) return {2.0, {-1.0, 0.0}, 1};
  if (order == 4) return {30.0 / 12.0, {-16.0 / 12.0, 1.0 / 12.0}, 2};
  throw Error(ErrorCode::InvalidParameter, "stencil order must be 2 or 4");
}

}  // namespace

DiscreteOperator::DiscreteOperator(Grid grid, int order, std::vector<double> axis_weights,
                                   std::vector<double> potential, std::string description,
                                   std::size_t dimension_cap)
    : grid_(std::move(grid)),
      order_(order),
      weights_(std::move(axis_weights)),
      potential_(std::move(potential)),
      description_(std::move(description)) {
  const Stencil st = stencil_for(order_);
  const std::size_t n = grid_.size();
  if (n > dimension_cap) {
    throw Error(ErrorCode::SizeError,
                "operator dimension " + std::to_string(n) + " exceeds cap " + std::to_string(dimension_cap));
  }
  if (weights_.size() != grid_.dimension()) {
    throw Error(ErrorCode::InvalidParameter, "one weight per grid axis is required");
  }
  if (potential_.size() != n) throw Error(ErrorCode::InvalidParameter, "potential size does not match grid");
  for (double v : potential_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::DomainError, "potential is not finite on the grid");
  }

  const std::size_t dims = grid_.dimension();
  std::vector<double> scale(dims);
  for (std::size_t a = 0; a < dims; ++a) {
    const double dx = grid_.axis(a).spacing();
    scale[a] = weights_[a] / (dx * dx);
  }
  double center = 0.0;
  for (std::size_t a = 0; a < dims; ++a) center += scale[a] * st.center;

  const std::size_t per_row = 1 + 2 * static_cast<std::size_t>(st.reach) * dims;
  std::vector<int> outer(n + 1, 0);
  std::vector<int> inner;
  std::vector<double> vals;
  inner.reserve(n * per_row);
  vals.reserve(n * per_row);

  std::vector<std::pair<long, double>> row;
  row.reserve(per_row);
  for (std::size_t i = 0; i < n; ++i) {
    row.clear();
    row.emplace_back(static_cast<long>(i), center + potential_[i]);
    for (std::size_t a = 0; a < dims; ++a) {
      const int idx = grid_.index_along(i, a);
      const int npts = grid_.axis(a).points;
      const long stride = static_cast<long>(grid_.stride(a));
      for (int d = 1; d <= st.reach; ++d) {
        const double c = scale[a] * st.off[static_cast<std::size_t>(d - 1)];
        if (idx - d >= 0) row.emplace_back(static_cast<long>(i) - d * stride, c);
        if (idx + d < npts) row.emplace_back(static_cast<long>(i) + d * stride, c);
      }
    }
    std::sort(row.begin(), row.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
    for (const auto& [col, v] : row) {
      inner.push_back(static_cast<int>(col));
      vals.push_back(v);
    }
    outer[i + 1] = static_cast<int>(inner.size());
  }
  Eigen::Map<const SparseMatrix> view(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n),
                                      static_cast<Eigen::Index>(vals.size()), outer.data(), inner.data(),
                                      vals.data());
  matrix_ = view;
}

double DiscreteOperator::symmetry_defect() const {
  double worst = 0.0;
  for (int r = 0; r < matrix_.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(matrix_, r); it; ++it) {
      worst = std::max(worst, std::abs(it.value() - matrix_.coeff(it.col(), r)));
    }
  }
  return worst;
}

void DiscreteOperator::write_triplets(std::ostream& out) const {
  char buf[96];
  out << "% " << matrix_.rows() << ' ' << matrix_.cols() << ' ' << matrix_.nonZeros() << '\n';
  for (int r = 0; r < matrix_.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(matrix_, r); it; ++it) {
      std::snprintf(buf, sizeof buf, "%d %d %.17g\n", r, static_cast<int>(it.col()), it.value());
      out << buf;
    }
  }
}

DiscreteOperator assemble(const Grid& grid, int order, std::vector<double> axis_weights,
                          const std::function<double(std::span<const double>)>& potential,
                          std::string description, std::size_t dimension_cap) {
  if (grid.size() > dimension_cap) {
    throw Error(ErrorCode::SizeError, "operator dimension " + std::to_string(grid.size()) + " exceeds cap " +
                                          std::to_string(dimension_cap));
  }
  std::vector<double> v(grid.size());
  std::vector<double> point(grid.dimension());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t a = 0; a < grid.dimension(); ++a) point[a] = grid.coordinate(i, a);
    v[i] = potential(point);
  }
  return DiscreteOperator(grid, order, std::move(axis_weights), std::move(v), std::move(description),
                          dimension_cap);
}

DiscreteOperator assemble_1d(const Expr& potential, const Grid& grid, double c, int order) {
  if (grid.dimension() != 1) throw Error(ErrorCode::InvalidParameter, "assemble_1d needs a one-axis grid");
  if (!(c > 0.0)) throw Error(ErrorCode::InvalidParameter, "kinetic weight must be positive");
  if (potential.arity() != 1) throw Error(ErrorCode::InvalidParameter, "potential must have one variable");
  std::string desc = "1d;V=" + potential.to_string() + ";c=" + num(c) + ";grid=" + grid.describe() +
                     ";order=" + std::to_string(order);
  return assemble(grid, order, {c}, [&](std::span<const double> p) { return potential.eval(p); },
                  std::move(desc));
}

DiscreteOperator assemble_fibered(const ModelSpec& model, const SemiclassicalParams& params, const Grid& grid,
                                  int order, std::size_t dimension_cap) {
  const std::size_t n = static_cast<std::size_t>(model.n);
  if (grid.dimension() != n + 1) {
    throw Error(ErrorCode::InvalidParameter, "fibered grid must have n + 1 axes");
  }
  if (grid.size() > dimension_cap) {
    throw Error(ErrorCode::SizeError, "operator dimension " + std::to_string(grid.size()) + " exceeds cap " +
                                          std::to_string(dimension_cap));
  }
  // f on the x-subgrid, g on the y-axis, product on the tensor grid.
  const Axis& yaxis = grid.axis(n);
  const std::size_t ny = static_cast<std::size_t>(yaxis.points);
  const std::size_t nx = grid.size() / ny;
  std::vector<double> gy(ny);
  for (std::size_t j = 0; j < ny; ++j) gy[j] = model.g({yaxis.coordinate(static_cast<int>(j))});
  std::vector<double> fx(nx);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t a = 0; a < n; ++a) x[a] = grid.coordinate(i * ny, a);
    fx[i] = model.f.eval(x);
  }
  std::vector<double> v(grid.size());
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) v[i * ny + j] = fx[i] * gy[j];
  }
  std::vector<double> weights(n + 1, params.hbar * params.hbar);
  weights[n] = 1.0;
  std::string desc = "fibered;f=" + model.f.to_string() + ";g=" + model.g.to_string() + ";a=" + num(model.a) +
                     ";hbar=" + num(params.hbar) + ";grid=" + grid.describe() + ";order=" + std::to_string(order);
  return DiscreteOperator(grid, order, std::move(weights), std::move(v), std::move(desc), dimension_cap);
}

DiscreteOperator assemble_ambient(const Expr& potential, double h, const Grid& grid, int order,
                                  std::size_t dimension_cap) {
  if (grid.dimension() != 2) throw Error(ErrorCode::InvalidParameter, "ambient grid must have two axes");
  if (potential.arity() != 2) throw Error(ErrorCode::InvalidParameter, "ambient potential needs two variables");
  if (!(h > 0.0)) throw Error(ErrorCode::InvalidParameter, "h must be positive");
  std::string desc = "ambient;V=" + potential.to_string() + ";h=" + num(h) + ";grid=" + grid.describe() +
                     ";order=" + std::to_string(order);
  return assemble(grid, order, {h * h, h * h}, [&](std::span<const double> p) { return potential.eval(p); },
                  std::move(desc), dimension_cap);
}

double agmon_extent(const std::function<double(double)>& potential, double energy, double hbar, double threshold,
                    double max_extent) {
  const double target = hbar * std::log(1.0 / threshold);
  const double step = std::min(1e-3 * max_extent, 0.01);
  auto integrand = [&](double t) { return std::sqrt(std::max(potential(t) - energy, 0.0)); };
  double dist = 0.0;
  double prev = integrand(0.0);
  for (double t = step; t <= max_extent + 0.5 * step; t += step) {
    const double cur = integrand(t);
    dist += 0.5 * step * (prev + cur);
    prev = cur;
    if (dist >= target) return t;
  }
  throw Error(ErrorCode::ExtentOverflow, "Agmon decay not reached within extent " + num(max_extent));
}

double transverse_threshold_extent(const Expr& g, double mu_max, double max_extent) {
  const double step = 1e-3;
  for (double t = step; t <= max_extent; t += step) {
    if (g({t}) > 4.0 * mu_max && g({-t}) > 4.0 * mu_max) return t;
  }
  throw Error(ErrorCode::ExtentOverflow, "g never exceeds 4 mu_max within extent " + num(max_extent));
}

std::vector<double> choose_extent(const ModelSpec& model, const SemiclassicalParams& params,
                                  std::span<const double> mu, int j_max, int k_max, const ExtentOptions& options) {
  if (j_max < 1 || k_max < 1 || mu.size() < static_cast<std::size_t>(j_max)) {
    throw Error(ErrorCode::InvalidParameter, "choose_extent needs j_max, k_max >= 1 and j_max values of mu");
  }
  const std::size_t n = static_cast<std::size_t>(model.n);
  const double power = 2.0 / (2.0 + model.a);
  // Reduced-operator level k_max of band j, relative to mu_j: 1 + hbar_j e_k(1).
  const auto unit_levels = harmonic_levels(model.hess_f0, 1.0, model.a, k_max);
  const double e_top = unit_levels.back();

  std::vector<double> extent(n + 1, options.min_extent);
  double top_energy = 0.0;
  for (int j = 1; j <= j_max; ++j) {
    const double mu_j = mu[static_cast<std::size_t>(j - 1)];
    const double hbar_j = params.hbar / std::sqrt(mu_j);
    const double level = 1.0 + hbar_j * e_top;
    top_energy = std::max(top_energy, mu_j * level);
    for (std::size_t a = 0; a < n; ++a) {
      for (double dir : {-1.0, 1.0}) {
        auto fpow = [&](double t) {
          std::vector<double> x(n, 0.0);
          x[a] = dir * t;
          return std::pow(model.f.eval(x), power);
        };
        const double l = agmon_extent(fpow, level, hbar_j, options.decay_threshold, options.max_extent);
        extent[a] = std::max(extent[a], l);
      }
    }
  }
  const double y_threshold = transverse_threshold_extent(model.g, top_energy, options.max_extent);
  double y_agmon = 0.0;
  for (double dir : {-1.0, 1.0}) {
    y_agmon = std::max(y_agmon, agmon_extent([&](double t) { return model.g({dir * t}); }, top_energy, 1.0,
                                             options.decay_threshold, options.max_extent));
  }
  extent[n] = std::max({extent[n], y_threshold, y_agmon});
  return extent;
}

}  // namespace bolab
