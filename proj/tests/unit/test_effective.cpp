#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "bolab/eigensolve.hpp"
#include "bolab/effective.hpp"
#include "bolab/error.hpp"
#include "bolab/transverse.hpp"

using namespace bolab;

namespace {

ModelSpec model(const char* f, const char* g, double a, double f_inf = std::numeric_limits<double>::infinity()) {
  ModelDescription d;
  d.f_expr = f;
  d.g_expr = g;
  d.a = a;
  d.f_infinity = f_inf;
  return validate_model(d);
}

const std::vector<double> kHarmonicMu{1, 3, 5, 7, 9, 11, 13, 15, 17, 19, 21, 23, 25, 27};

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::IOError;
}

}  // namespace

TEST(HarmonicLevels, OneDimensional) {
  const auto e = harmonic_levels(Eigen::MatrixXd::Constant(1, 1, 2.0), 1.0, 2.0, 4);
  for (int k = 1; k <= 4; ++k) EXPECT_NEAR(e[k - 1], (2 * k - 1) / std::sqrt(2.0), 1e-15);
}

TEST(HarmonicLevels, TwoDimensional) {
  Eigen::MatrixXd hess = Eigen::Vector2d(2.0, 8.0).asDiagonal();
  const auto e = harmonic_levels(hess, 1.0, 2.0, 4);
  const double w1 = std::sqrt(0.5);
  const double w2 = std::sqrt(2.0);
  EXPECT_NEAR(e[0], w1 + w2, 1e-14);
  EXPECT_NEAR(e[1], 3 * w1 + w2, 1e-14);
  EXPECT_NEAR(e[2], 5 * w1 + w2, 1e-14);
  EXPECT_NEAR(e[3], std::min(7 * w1 + w2, w1 + 3 * w2), 1e-14);
}

TEST(HarmonicLevels, GroundMatchesCoefficientIdentity) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 2;
    Eigen::MatrixXd b(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) b(i, j) = u(rng);
    }
    const Eigen::MatrixXd hess = b * b.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
    const double mu = 1.0 + 10.0 * std::abs(u(rng));
    const double a = 1.0 + 5.0 * std::abs(u(rng));
    const double e1 = harmonic_levels(hess, mu, a, 1)[0];
    EXPECT_NEAR(e1, ground_coefficient(hess, mu, a), 1e-12 * e1);
  }
}

TEST(PredictLow, StandardModel) {
  const ModelSpec m = model("1 + x^2", "y^2", 2);
  const auto p = predict_low(m, h_of_hbar(0.1, 2), kHarmonicMu, 1, 1);
  EXPECT_NEAR(p.value, 1.0 + 0.1 * std::sqrt(0.5), 1e-14);
  EXPECT_EQ(p.remainder_order, 2.0);
  EXPECT_TRUE(p.valid());
  const auto p2 = predict_low(m, h_of_hbar(0.1, 2), kHarmonicMu, 2, 1);
  EXPECT_NEAR(p2.value, 3.0 + 0.1 * std::sqrt(3.0) * std::sqrt(0.5), 1e-14);
  EXPECT_NEAR(p2.value, 3.12247, 1e-5);
  EXPECT_EQ(predict_low(m, h_of_hbar(0.1, 2), kHarmonicMu, 1, 2).remainder_order, 1.5);
}

TEST(PredictLow, ZeroHbarLimit) {
  const ModelSpec m = model("1 + x^2", "y^2", 2);
  EXPECT_EQ(predict_low(m, SemiclassicalParams{0.0, 0.0}, kHarmonicMu, 3, 2).value, 5.0);
}

TEST(PredictLow, MonotoneInBand) {
  const ModelSpec m = model("1 + x^2", "y^2", 2);
  for (int k = 1; k <= 3; ++k) {
    double prev = 0.0;
    for (int j = 1; j <= 5; ++j) {
      const auto p = predict_low(m, h_of_hbar(0.05, 2), kHarmonicMu, j, k);
      EXPECT_GT(p.value, prev);
      EXPECT_TRUE(p.valid());
      prev = p.value;
    }
  }
}

TEST(PredictLow, EssentialFloorGate) {
  const ModelSpec m = model("1 + 3*x^2/(1 + x^2)", "y^2", 2, 4.0);
  EXPECT_TRUE(predict_low(m, h_of_hbar(0.1, 2), kHarmonicMu, 1, 1).valid());
  EXPECT_EQ(code_of([&] { predict_low(m, h_of_hbar(0.1, 2), kHarmonicMu, 2, 1); }), ErrorCode::OutsideValidity);
}

TEST(PredictMiddle, Band13) {
  const ModelSpec m = model("1 + x^2", "y^2", 2);
  const auto p = predict_middle(m, h_of_hbar(0.15, 2), kHarmonicMu, 13);
  EXPECT_NEAR(p.value, 25.0 + 0.15 * 5.0 * std::sqrt(0.5), 1e-13);
  EXPECT_NEAR(p.value, 25.5303, 1e-4);
  EXPECT_NEAR(p.remainder_scale, 25.0 * 0.15 * 0.15, 1e-14);
  EXPECT_TRUE(p.valid());
}

TEST(PredictMiddle, Gates) {
  const ModelSpec m = model("1 + x^2", "y^2", 2);
  const std::vector<double> mu{1.0, 50.0};
  EXPECT_EQ(code_of([&] { predict_middle(m, h_of_hbar(0.15, 2), mu, 2); }), ErrorCode::OutsideValidity);
  const ModelSpec linear = model("1 + x^2", "abs(y)", 1);
  EXPECT_EQ(code_of([&] { predict_middle(linear, h_of_hbar(0.15, 1), kHarmonicMu, 1); }), ErrorCode::OutsideValidity);
}

TEST(Reduced, ConstantProfileGivesBoxLevels) {
  ModelSpec m = model("1 + x^2", "y^2", 2);
  m.f = Expr::parse("1 + 0*x", {"x"});
  const double hbar = 0.4;
  const double mu = 3.0;
  const Grid g({Axis{2.0, 201}});
  const auto r = dense_lowest(reduced_operator(m, h_of_hbar(hbar, 2), mu, g, 4), 3, false);
  const auto box = dense_lowest(assemble_1d(Expr::parse("0", {"t"}), g, hbar * hbar, 4), 3, false);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(r.eigenvalues[k], mu + box.eigenvalues[k], 1e-12);
}

TEST(Reduced, BandShiftIsDiagonal) {
  const ModelSpec m = model("1 + x^2", "y^2", 2);
  const Grid g({Axis{3.0, 61}});
  const auto p = h_of_hbar(0.2, 2);
  const SparseMatrix a1 = reduced_operator(m, p, 1.0, g, 4).matrix();
  const SparseMatrix a5 = reduced_operator(m, p, 9.0, g, 4).matrix();
  Eigen::MatrixXd diff = Eigen::MatrixXd(a5) - Eigen::MatrixXd(a1);
  for (int i = 0; i < diff.rows(); ++i) {
    const double x = g.coordinate(static_cast<std::size_t>(i), 0);
    EXPECT_NEAR(diff(i, i), 8.0 * std::sqrt(1 + x * x), 1e-13);
    diff(i, i) = 0.0;
  }
  EXPECT_EQ(diff.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Reduced, GroundNearHarmonicPrediction) {
  const ModelSpec m = model("1 + x^2", "y^2", 2);
  const auto p = h_of_hbar(0.1, 2);
  const auto r = dense_lowest(reduced_operator(m, p, 1.0, Grid({Axis{3.0, 601}}), 4), 1, false);
  EXPECT_NEAR(r.eigenvalues[0], 1.0 + 0.1 * std::sqrt(0.5), 0.1 * 0.1);
}

TEST(CompareBand, LowerBoundAndClusterCount) {
  const ModelSpec m = model("1 + x^2", "y^2", 2);
  const auto b = compare_band(m, h_of_hbar(0.3, 2), kHarmonicMu, 1, 3);
  ASSERT_EQ(b.full.size(), 3u);
  ASSERT_EQ(b.reduced.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_GE(b.full[k], b.reduced[k] - (b.full_budget[k] + b.reduced_budget[k]));
    EXPECT_GT(b.full[k], b.window_low);
    EXPECT_LT(b.full[k], b.window_high);
  }
}
