#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "bolab/discretize.hpp"
#include "bolab/eigensolve.hpp"
#include "bolab/model.hpp"

namespace bolab {

class ResultCache;
struct TransverseSpectrum;

enum class Regime { Low, Reduced, Middle, Surface };
std::string_view to_string(Regime regime);

/// One inequality checked when a prediction was built: value < bound
/// (strict) or value <= bound.
struct Gate {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool strict = true;

  bool holds() const { return strict ? value < bound : value <= bound; }
};

/// Closed-form eigenvalue approximation. For the fibered regimes `value` is an
/// eigenvalue of hbar^2 D_x^2 + D_y^2 + f g; for the surface regime it is an
/// eigenvalue of -h^2 Laplacian + V.
struct Prediction {
  Regime regime = Regime::Low;
  int j = 1;
  int k = 1;      ///< longitudinal level (fibered regimes)
  int alpha = 0;  ///< tangential level (surface regime)
  int ell = 1;    ///< index of the minimum (surface regime)
  double mu_j = 0.0;
  double h = 0.0;
  double hbar = 0.0;
  double hbar_j = 0.0;  ///< hbar / sqrt(mu_j)
  double value = 0.0;
  /// Claimed power of the small parameter in the remainder; zero when the
  /// claim is a bound shape instead.
  double remainder_order = 0.0;
  std::string remainder_shape;
  /// The remainder shape evaluated with unit constant.
  double remainder_scale = 0.0;
  std::vector<Gate> gates;

  bool valid() const;
  std::string validity() const;
};

/// Sorted sums sum_i (2 alpha_i + 1) sqrt(mu_j q_i / (2+a)) over multi-indices,
/// q_i the eigenvalues of hess; the first k_max are returned.
std::vector<double> harmonic_levels(const Eigen::MatrixXd& hess, double mu_j, double a, int k_max);

/// sqrt(mu_j / (2+a)) tr(hess^{1/2}), computed through the matrix square root.
double ground_coefficient(const Eigen::MatrixXd& hess, double mu_j, double a);

/// hbar^2 D_x^2 + mu_j f(x)^{2/(2+a)} on an n-axis grid.
DiscreteOperator reduced_operator(const ModelSpec& model, const SemiclassicalParams& params, double mu_j,
                                  const Grid& grid, int order, std::size_t dimension_cap = kDefaultDimensionCap);

/// mu_j + hbar e_k(mu_j), gated on mu_j below the essential floor.
/// `mu` lists mu_1.. in ascending order.
Prediction predict_low(const ModelSpec& model, const SemiclassicalParams& params, std::span<const double> mu,
                       int j, int k);

/// Same k = 1 value with the bound shape C mu_j hbar^2; gated on a >= 2,
/// f_infinity = infinity and mu_j <= hbar^-2.
Prediction predict_middle(const ModelSpec& model, const SemiclassicalParams& params, std::span<const double> mu,
                          int j);

/// Numerical parameters shared by all fibered solves.
struct FiberedNumerics {
  int order = 4;
  /// Grid points per harmonic-oscillator width along each x axis.
  double points_per_width = 8.0;
  /// y spacing times sqrt(top energy).
  double y_resolution = 0.2;
  ExtentOptions extent;
  double tolerance = 1e-9;
  std::uint64_t seed = 1;
  InnerSolver inner = InnerSolver::SparseLDLT;
  int guard = 4;
  std::size_t dimension_cap = kDefaultDimensionCap;
};

/// Coarse grid for fibered solves covering bands `mu` (ascending) up to the
/// harmonic level k_max; the fine grid is coarse.refined().
Grid fibered_grid(const ModelSpec& model, const SemiclassicalParams& params, std::span<const double> mu, int k_max,
                  const FiberedNumerics& numerics);

/// Lowest eigenvalues on coarse and fine grids with two-grid extrapolation.
struct TwoGridLevels {
  std::vector<double> value;
  std::vector<double> budget;
  std::vector<double> coarse;
  std::vector<double> fine;
  Grid grid;  ///< coarse grid
};

/// `floor` must lie below the spectrum; mu_1 always does, since the full
/// operator dominates mu_1 f^{2/(2+a)} >= mu_1.
TwoGridLevels full_lowest(const ModelSpec& model, const SemiclassicalParams& params, const Grid& coarse, int count,
                          double floor, const FiberedNumerics& numerics, ResultCache* cache = nullptr);
/// Reduced-operator levels on the x axes of `coarse` (a fibered grid).
TwoGridLevels reduced_lowest(const ModelSpec& model, const SemiclassicalParams& params, double mu_j,
                             const Grid& coarse, int count, const FiberedNumerics& numerics,
                             ResultCache* cache = nullptr);

/// Band j of the full operator matched against the reduced operator with mu_j.
/// Full eigenvalues are assigned to band j by proximity: those within half the
/// transverse gap of mu_j. The assignment must be unique, so the window has to
/// hold exactly as many full eigenvalues as reduced band-j levels.
struct BandComparison {
  int j = 1;
  double window_low = 0.0;
  double window_high = 0.0;
  std::vector<double> full;            ///< band-j levels, ascending
  std::vector<double> full_budget;
  std::vector<double> reduced;
  std::vector<double> reduced_budget;
};

BandComparison compare_band(const ModelSpec& model, const SemiclassicalParams& params, std::span<const double> mu,
                            int j, int k_max, const FiberedNumerics& numerics = {}, ResultCache* cache = nullptr);

struct ReducedError {
  double full = 0.0;
  double reduced = 0.0;
  double error = 0.0;   ///< full - reduced
  double budget = 0.0;  ///< combined discretization budget
};

ReducedError reduced_vs_full_error(const ModelSpec& model, const SemiclassicalParams& params,
                                   std::span<const double> mu, int j, int k, const FiberedNumerics& numerics = {},
                                   ResultCache* cache = nullptr);

/// Lowest-level eigenvalue of band j identified among the eigenvalues nearest
/// `target` by maximal overlap with the product state psi(x) phi_j^x(y), where
/// psi is the reduced ground state and phi_j^x the transverse eigenfunction
/// rescaled to the fiber at x.
struct BandLevel {
  double value = 0.0;
  double budget = 0.0;
  double coarse = 0.0;
  double fine = 0.0;
  double overlap = 0.0;  ///< squared overlap on the fine grid
};

BandLevel band_ground_level(const ModelSpec& model, const SemiclassicalParams& params,
                            const TransverseSpectrum& spectrum, int j, double target, int nearest,
                            const FiberedNumerics& numerics = {}, ResultCache* cache = nullptr);

}  // namespace bolab
