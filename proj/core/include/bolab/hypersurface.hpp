#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bolab/discretize.hpp"
#include "bolab/effective.hpp"
#include "bolab/expr.hpp"

namespace bolab {

class ResultCache;

/// Sample of a closed plane curve s(theta), theta in [0, 2 pi).
struct CurvePoint {
  double theta = 0.0;
  double x = 0.0;
  double y = 0.0;
  double tx = 0.0;   ///< unit tangent
  double ty = 0.0;
  double nx = 0.0;   ///< unit normal
  double ny = 0.0;
  double arc = 0.0;  ///< |s'(theta)|
  double curvature = 0.0;
};

struct Curve {
  Expr x;
  Expr y;
  int orientation = 1;
  std::vector<CurvePoint> points;  ///< uniform in theta
};

/// Samples the curve (x(theta), y(theta)). The normal is the tangent rotated
/// by -90 degrees, which points outward on counter-clockwise curves;
/// orientation -1 flips it. Rejects open, non-immersed or self-intersecting
/// curves with DegenerateParametrization.
Curve build_gamma(const Expr& x_of_theta, const Expr& y_of_theta, int orientation = 1, int samples = 256);

/// (1/(2m)!) times the 2m-th derivative of V along the normal line through
/// `point`, by Vandermonde finite differences extrapolated over steps
/// {step, step/2}. OrderMismatch when a lower-order coefficient does not
/// vanish or the result is not positive.
double extract_f(const Expr& V, int m, std::span<const double> point, std::span<const double> normal, double step);

struct SurfaceMinimum {
  double theta = 0.0;
  double f = 0.0;
  double rho2 = 0.0;  ///< (1/2) d^2 f / d sigma^2, sigma the arc length
  double rho = 0.0;
  double trplus = 0.0;  ///< sum of the rho over tangent directions; equals rho for plane curves
};

struct MinimaResult {
  double eta0 = 0.0;
  std::vector<SurfaceMinimum> minima;  ///< global minima, ascending in theta
};

/// Global minima of periodic samples f(theta_i), theta_i = 2 pi i / M, refined
/// by Newton's method on the trigonometric interpolant. `arc` holds |s'| at
/// the same angles.
MinimaResult find_minima(std::span<const double> f_samples, std::span<const double> arc);

/// Potential vanishing to order 2m on a closed curve, with the profile f and
/// its minima.
struct SurfaceWell {
  Expr V;
  int m = 1;
  Curve gamma;
  std::vector<double> f_samples;
  double eta0 = 0.0;
  std::vector<SurfaceMinimum> minima;
};

SurfaceWell make_surface_well(const Expr& V, int m, Curve gamma);

/// First two terms of the eigenvalue expansion at minimum `ell`, with
/// transverse eigenvalue mu_j of D^2 + t^{2m}. The gate requires
/// mu_j <= gate_factor * h^{-4m/((m+1)(2m+3))}.
Prediction predict_surface(const SurfaceWell& well, double mu_j, int j, int alpha, int ell, double h,
                           double gate_factor = 1.0);

/// A(alpha) = (2 alpha rho + Tr+) / (eta0^{m/(2m+2)} sqrt(m+1)).
double surface_coefficient(const SurfaceWell& well, int alpha, int ell);

struct SurfaceNumerics {
  int order = 4;
  /// Grid points per transverse oscillator width (h^2 / eta0)^{1/(2m+2)}.
  double points_per_width = 6.0;
  double decay_threshold = 1e-8;
  double max_extent = 20.0;
  double tolerance = 1e-9;
  std::uint64_t seed = 1;
  int guard = 4;
  double gate_factor = 1.0;
  std::size_t dimension_cap = kDefaultDimensionCap;
};

/// Coarse ambient grid for energies up to `energy`.
Grid ambient_grid(const SurfaceWell& well, double h, double energy, const SurfaceNumerics& numerics);

struct SurfaceRow {
  Prediction prediction;
  double theta_min = 0.0;
  double computed = 0.0;
  double budget = 0.0;
  double error = 0.0;  ///< computed - predicted
  std::size_t eigen_index = 0;
};

/// Solves the ambient operator at each h, matches every prediction
/// (j <= mu.size(), alpha <= alpha_max, all minima) to the nearest unused
/// eigenvalue in ascending (j, alpha, ell) order, and returns one row per
/// prediction. `mu` holds the transverse eigenvalues mu_1..mu_jmax.
std::vector<SurfaceRow> verify_surface(const SurfaceWell& well, std::span<const double> mu, int alpha_max,
                                       std::span<const double> h_list, const SurfaceNumerics& numerics = {},
                                       ResultCache* cache = nullptr);

}  // namespace bolab
