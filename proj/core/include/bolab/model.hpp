#pragma once

#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bolab/expr.hpp"

namespace bolab {

/// Unvalidated model description as it arrives from a configuration file.
struct ModelDescription {
  int n = 1;  ///< longitudinal dimension, 1 or 2
  double a = 2.0;
  std::string f_expr;
  std::string g_expr;
  std::vector<std::string> x_vars;  ///< defaults to {"x"} or {"x1","x2"}
  std::string y_var = "y";
  double f_infinity = std::numeric_limits<double>::infinity();
  double validation_box = 3.0;  ///< half-width of the sampling box for f and g
  int samples_per_axis = 25;
};

/// Validated fibered potential f(x) g(y) with f normalized so f(0) = 1.
struct ModelSpec {
  int n = 1;
  int m = 1;
  double a = 2.0;
  Expr f;
  Expr g;
  double f_infinity = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd hess_f0;
  /// f(0) before normalization; the user's h maps to h / sqrt(f0_original).
  double f0_original = 1.0;
  double validation_box = 3.0;
  int samples_per_axis = 25;
  std::vector<std::string> warnings;

  /// Physical h after the f(0) normalization.
  double normalized_h(double user_h) const;
};

struct SemiclassicalParams {
  double h = 1.0;
  double hbar = 1.0;
};

ModelSpec validate_model(const ModelDescription& raw);

/// Revalidate an already normalized model (idempotent).
ModelSpec validate_model(const ModelSpec& spec);

/// hbar = h^{2/(2+a)}.
SemiclassicalParams hbar_of_h(double h, double a);

/// Inverse map: h = hbar^{(2+a)/2}.
SemiclassicalParams h_of_hbar(double hbar, double a);

/// sp(H_h) = hbar^a sp(H^hbar): multiplies each eigenvalue by hbar^a.
std::vector<double> spectral_scaling(const std::vector<double>& eigs_of_Hhbar, double hbar, double a);

}  // namespace bolab
