#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "bolab/discretize.hpp"
#include "bolab/expr.hpp"
#include "bolab/grid.hpp"

namespace bolab {

struct ModelSpec;
class ResultCache;

struct TransverseOptions {
  int order = 4;
  /// Target accuracy of each mu_j; the grid is refined until the Richardson
  /// budget falls below it.
  double tolerance = 1e-8;
  /// Spacing times sqrt(max(mu_max, 1)) on the coarse grid.
  double resolution = 0.04;
  int max_refinements = 3;
  double decay_threshold = 1e-14;
  double min_extent = 4.0;
  double max_extent = 60.0;
  std::uint64_t seed = 1;
};

/// Eigenpairs of D^2 + g on the line. mu holds Richardson-extrapolated values;
/// phi holds fine-grid eigenfunctions normalized so that spacing * sum phi^2 = 1.
struct TransverseSpectrum {
  double a = 2.0;
  Expr g;
  std::vector<double> mu;
  std::vector<double> budget;        ///< Richardson error estimate per mu_j
  std::vector<double> mu_fine;       ///< raw eigenvalues on the fine grid
  Grid grid;                         ///< the fine grid
  int order = 4;
  Eigen::MatrixXd phi;               ///< column j-1 is phi_j
  bool even_potential = false;
  std::vector<int> parity;           ///< +1 even, -1 odd, 0 indefinite

  std::size_t size() const noexcept { return mu.size(); }
  double spacing() const { return grid.axis(0).spacing(); }
  Eigen::VectorXd coordinates() const;
  /// Smallest gap mu_{j+1} - mu_j.
  double min_gap() const;
};

TransverseSpectrum transverse_spectrum(const Expr& g, double a, int j_max, const TransverseOptions& options = {},
                                       ResultCache* cache = nullptr);

/// lambda_j(x) = mu_j f(x)^{2/(2+a)}.
double fiber_eigenvalue(double mu_j, double f_at_x, double a);

/// mu_1 f_infinity^{2/(2+a)}, infinite when f_infinity is.
double essential_floor(const ModelSpec& model, double mu_1);

/// Trapezoidal integral of t^{2m+1} phi^2 over the sampled grid.
double odd_moment(const Eigen::Ref<const Eigen::VectorXd>& phi, const Eigen::Ref<const Eigen::VectorXd>& t,
                  int m);
double odd_moment(const TransverseSpectrum& spec, int j, int m);

/// Discrete operator -d^2/dt^2 + g on the spectrum's fine grid.
DiscreteOperator transverse_operator(const TransverseSpectrum& spec);

struct CorrectorResult {
  Eigen::VectorXd phi;
  double mu = 0.0;             ///< discrete eigenvalue used in the equation
  double residual = 0.0;       ///< ||(A - mu) phi - rhs|| / ||rhs||
  double orthogonality = 0.0;  ///< |<phi, phi_j>| with the grid inner product
  int iterations = 0;          ///< solves including refinement steps
};

/// Solves (A - mu_j) phi = t^{2m+1} phi_j on the orthogonal complement of
/// phi_j, A being the fine-grid operator of the spectrum and mu_j its discrete
/// eigenvalue. Uses a sparse LU factorization of the bordered system.
CorrectorResult corrector_solve(const TransverseSpectrum& spec, int j, int m, double tolerance = 1e-11);

/// ||t phi_j'|| and ||(t d/dt)^2 phi_j|| by central differences.
struct DilationMoments {
  double first = 0.0;
  double second = 0.0;
};
DilationMoments dilation_moments(const TransverseSpectrum& spec, int j);

}  // namespace bolab
