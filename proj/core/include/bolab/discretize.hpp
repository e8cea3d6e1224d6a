#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "bolab/expr.hpp"
#include "bolab/grid.hpp"

namespace bolab {

struct ModelSpec;
struct SemiclassicalParams;

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

inline constexpr std::size_t kDefaultDimensionCap = 4'000'000;

/// Finite-difference operator  sum_a -w_a d^2/dx_a^2 + diag(V)  with Dirichlet
/// walls, stored with both triangles so symmetry is checkable entry by entry.
/// Immutable after assembly.
class DiscreteOperator {
 public:
  DiscreteOperator(Grid grid, int order, std::vector<double> axis_weights, std::vector<double> potential,
                   std::string description, std::size_t dimension_cap = kDefaultDimensionCap);

  std::size_t dimension() const noexcept { return grid_.size(); }
  const Grid& grid() const noexcept { return grid_; }
  int order() const noexcept { return order_; }
  const std::vector<double>& axis_weights() const noexcept { return weights_; }
  const std::vector<double>& potential() const noexcept { return potential_; }
  const SparseMatrix& matrix() const noexcept { return matrix_; }
  /// Canonical text naming what was assembled; the cache key is derived from it.
  const std::string& description() const noexcept { return description_; }

  std::span<const int> row_offsets() const {
    return {matrix_.outerIndexPtr(), static_cast<std::size_t>(matrix_.outerSize()) + 1};
  }
  std::span<const int> column_indices() const {
    return {matrix_.innerIndexPtr(), static_cast<std::size_t>(matrix_.nonZeros())};
  }
  std::span<const double> values() const {
    return {matrix_.valuePtr(), static_cast<std::size_t>(matrix_.nonZeros())};
  }

  /// max |A_ij - A_ji| over stored entries.
  double symmetry_defect() const;

  /// One "row col value" line per stored entry, 0-based, preceded by a
  /// "% rows cols nnz" header.
  void write_triplets(std::ostream& out) const;

 private:
  Grid grid_;
  int order_;
  std::vector<double> weights_;
  std::vector<double> potential_;
  std::string description_;
  SparseMatrix matrix_;
};

/// -c d^2/dt^2 + V(t) on a one-axis grid.
DiscreteOperator assemble_1d(const Expr& potential, const Grid& grid, double c, int order);

/// hbar^2 D_x^2 + D_y^2 + f(x) g(y). Axes 0..n-1 are x, axis n is y.
DiscreteOperator assemble_fibered(const ModelSpec& model, const SemiclassicalParams& params, const Grid& grid,
                                  int order, std::size_t dimension_cap = kDefaultDimensionCap);

/// -h^2 Laplacian + V(z) on a two-axis grid.
DiscreteOperator assemble_ambient(const Expr& potential, double h, const Grid& grid, int order,
                                  std::size_t dimension_cap = kDefaultDimensionCap);

/// Generic entry point: potential sampled by a callback over grid coordinates.
DiscreteOperator assemble(const Grid& grid, int order, std::vector<double> axis_weights,
                          const std::function<double(std::span<const double>)>& potential,
                          std::string description, std::size_t dimension_cap = kDefaultDimensionCap);

struct ExtentOptions {
  double min_extent = 2.0;
  double max_extent = 60.0;
  /// Target bound on exp(-Agmon distance / effective hbar) at the wall.
  double decay_threshold = 1e-12;
};

/// Smallest L > 0 beyond which exp(-int_0^L sqrt[(V - E)_+] dt / hbar) drops
/// below the threshold, marching along t >= 0 with a potential sampled at
/// `potential(t)`. Raises ExtentOverflow when `max_extent` is reached first.
double agmon_extent(const std::function<double(double)>& potential, double energy, double hbar,
                    double threshold, double max_extent);

/// Per-axis half-extents for the fibered operator at the given transverse
/// eigenvalues `mu` (ascending, at least j_max entries).
std::vector<double> choose_extent(const ModelSpec& model, const SemiclassicalParams& params,
                                  std::span<const double> mu, int j_max, int k_max,
                                  const ExtentOptions& options = {});

/// The threshold rule for the transverse axis: smallest L (on a 1e-3 lattice)
/// with g(+-L) > 4 mu_max.
double transverse_threshold_extent(const Expr& g, double mu_max, double max_extent);

}  // namespace bolab
