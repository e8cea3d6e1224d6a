#include "bolab/model.hpp"

#include <array>
#include <cmath>
#include <cstdio>

#include <Eigen/Eigenvalues>

#include "bolab/error.hpp"

namespace bolab {

namespace {

constexpr double kGradientTolerance = 1e-8;
constexpr double kHessianFloor = 1e-12;
constexpr double kHomogeneityTolerance = 1e-10;
constexpr std::array<double, 3> kScalings{0.5, 2.0, 3.7};

std::string number_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Deterministic lattice on [-box, box]^dim, skipping the origin.
template <typename Visit>
void for_each_lattice_point(int dim, double box, int samples, Visit&& visit) {
  std::vector<double> point(static_cast<std::size_t>(dim));
  std::vector<int> idx(static_cast<std::size_t>(dim), 0);
  const double step = 2.0 * box / (samples - 1);
  for (;;) {
    bool origin = true;
    for (int d = 0; d < dim; ++d) {
      point[d] = -box + step * idx[d];
      if (2 * idx[d] == samples - 1) point[d] = 0.0;
      origin = origin && point[d] == 0.0;
    }
    if (!origin) visit(std::span<const double>(point));
    int d = dim - 1;
    while (d >= 0 && ++idx[d] == samples) idx[d--] = 0;
    if (d < 0) return;
  }
}

ModelSpec validate_impl(int n, double a, Expr f, const Expr& g, double f_infinity, double box, int samples,
                        double f0_original) {
  if (n != 1 && n != 2) throw Error(ErrorCode::InvalidParameter, "n must be 1 or 2");
  if (!(a > 0.0) || !std::isfinite(a)) throw Error(ErrorCode::InvalidParameter, "a must be a positive real");
  if (!(box > 0.0)) throw Error(ErrorCode::InvalidParameter, "validation_box must be positive");
  if (samples < 3) throw Error(ErrorCode::InvalidParameter, "samples_per_axis must be >= 3");
  if (f.arity() != static_cast<std::size_t>(n)) {
    throw Error(ErrorCode::InvalidParameter, "f must have exactly n variables");
  }
  if (g.arity() != 1) throw Error(ErrorCode::InvalidParameter, "g must have exactly one variable");

  const std::vector<double> origin(static_cast<std::size_t>(n), 0.0);
  const double f0 = f.eval(origin);
  if (!(f0 > 0.0)) throw Error(ErrorCode::NonPositive, "f(0) = " + number_text(f0) + " is not positive");
  if (f0 != 1.0) {
    f = Expr::parse("(" + f.to_string() + ") / " + number_text(f0), f.vars());
    f0_original *= f0;
    f_infinity /= f0;
  }
  if (!(f_infinity > 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "f_infinity must exceed f(0)");
  }

  ModelSpec spec;
  spec.n = n;
  spec.m = 1;
  spec.a = a;
  spec.f_infinity = f_infinity;
  spec.f0_original = f0_original;
  spec.validation_box = box;
  spec.samples_per_axis = samples;

  // Critical point and Hessian at the origin.
  spec.hess_f0 = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const Expr di = f.derive(static_cast<std::size_t>(i));
    const double gi = di.eval(origin);
    if (std::abs(gi) > kGradientTolerance) {
      throw Error(ErrorCode::MinimumNotAtOrigin,
                  "gradient of f at 0 has component " + number_text(gi) + " along " + f.vars()[i]);
    }
    for (int j = 0; j < n; ++j) spec.hess_f0(i, j) = di.derive(static_cast<std::size_t>(j)).eval(origin);
  }
  if ((spec.hess_f0 - spec.hess_f0.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw Error(ErrorCode::DegenerateHessian, "Hessian of f at 0 is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(spec.hess_f0, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= kHessianFloor) {
    throw Error(ErrorCode::DegenerateHessian,
                "Hessian of f at 0 has eigenvalue " + number_text(es.eigenvalues().minCoeff()));
  }

  double boundary_min = std::numeric_limits<double>::infinity();
  for_each_lattice_point(n, box, samples, [&](std::span<const double> x) {
    const double fx = f.eval(x);
    if (!(fx > 0.0)) throw Error(ErrorCode::NonPositive, "f is not positive on the validation box");
    if (!(fx > 1.0)) {
      throw Error(ErrorCode::MinimumNotAtOrigin, "f(x) <= f(0) at a sample point away from the origin");
    }
    bool on_boundary = false;
    for (double c : x) on_boundary = on_boundary || std::abs(std::abs(c) - box) < 1e-12 * box;
    if (on_boundary) boundary_min = std::min(boundary_min, fx);
  });
  if (std::isfinite(f_infinity) && boundary_min < 0.9 * f_infinity) {
    spec.warnings.push_back("f on the validation box boundary (min " + number_text(boundary_min) +
                            ") is below 0.9 * f_infinity");
  }

  for_each_lattice_point(1, box, samples, [&](std::span<const double> y) {
    const double gy = g.eval(y);
    if (!(gy > 0.0)) throw Error(ErrorCode::NonPositive, "g is not positive at y = " + number_text(y[0]));
    for (double mu : kScalings) {
      const double scaled = g({mu * y[0]});
      const double expected = std::pow(mu, a) * gy;
      if (std::abs(scaled - expected) > kHomogeneityTolerance * (1.0 + std::abs(scaled))) {
        throw Error(ErrorCode::NonHomogeneous, "g(" + number_text(mu) + " y) != " + number_text(mu) + "^a g(y) at y = " +
                                                   number_text(y[0]));
      }
    }
  });

  spec.f = std::move(f);
  spec.g = g;
  return spec;
}

}  // namespace

double ModelSpec::normalized_h(double user_h) const { return user_h / std::sqrt(f0_original); }

ModelSpec validate_model(const ModelDescription& raw) {
  if (raw.n != 1 && raw.n != 2) throw Error(ErrorCode::InvalidParameter, "n must be 1 or 2");
  std::vector<std::string> xv = raw.x_vars;
  if (xv.empty()) xv = raw.n == 1 ? std::vector<std::string>{"x"} : std::vector<std::string>{"x1", "x2"};
  if (xv.size() != static_cast<std::size_t>(raw.n)) {
    throw Error(ErrorCode::InvalidParameter, "x_vars must list exactly n names");
  }
  if (raw.f_expr.empty()) throw Error(ErrorCode::InvalidParameter, "f expression is empty");
  if (raw.g_expr.empty()) throw Error(ErrorCode::InvalidParameter, "g expression is empty");
  Expr f = Expr::parse(raw.f_expr, xv);
  Expr g = Expr::parse(raw.g_expr, {raw.y_var});
  return validate_impl(raw.n, raw.a, std::move(f), g, raw.f_infinity, raw.validation_box, raw.samples_per_axis,
                       1.0);
}

ModelSpec validate_model(const ModelSpec& spec) {
  return validate_impl(spec.n, spec.a, spec.f, spec.g, spec.f_infinity, spec.validation_box,
                       spec.samples_per_axis, spec.f0_original);
}

SemiclassicalParams hbar_of_h(double h, double a) {
  if (!(h > 0.0) || !(a > 0.0)) throw Error(ErrorCode::InvalidParameter, "h and a must be positive");
  return {h, std::pow(h, 2.0 / (2.0 + a))};
}

SemiclassicalParams h_of_hbar(double hbar, double a) {
  if (!(hbar > 0.0) || !(a > 0.0)) throw Error(ErrorCode::InvalidParameter, "hbar and a must be positive");
  return {std::pow(hbar, (2.0 + a) / 2.0), hbar};
}

std::vector<double> spectral_scaling(const std::vector<double>& eigs_of_Hhbar, double hbar, double a) {
  const double factor = std::pow(hbar, a);
  std::vector<double> out;
  out.reserve(eigs_of_Hhbar.size());
  for (double e : eigs_of_Hhbar) out.push_back(factor * e);
  return out;
}

}  // namespace bolab
