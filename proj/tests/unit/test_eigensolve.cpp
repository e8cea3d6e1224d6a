#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "bolab/discretize.hpp"
#include "bolab/eigensolve.hpp"
#include "bolab/error.hpp"
#include "bolab/model.hpp"

using namespace bolab;

namespace {

DiscreteOperator harmonic_line(int points, double half = 10.0) {
  return assemble_1d(Expr::parse("t^2", {"t"}), Grid({Axis{half, points}}), 1.0, 4);
}

}  // namespace

TEST(Iterative, HarmonicLevels) {
  const auto r = iterative_lowest(harmonic_line(2001), 6);
  ASSERT_EQ(r.size(), 6u);
  for (int j = 0; j < 6; ++j) EXPECT_NEAR(r.eigenvalues[j], 2 * j + 1, 1e-6) << "level " << j + 1;
}

TEST(Iterative, TwoByTwo) {
  SparseMatrix a(2, 2);
  a.insert(0, 0) = 2;
  a.insert(0, 1) = 1;
  a.insert(1, 0) = 1;
  a.insert(1, 1) = 2;
  a.makeCompressed();
  IterativeOptions o;
  o.guard = 0;
  const auto r = iterative_lowest(a, 2, o);
  EXPECT_NEAR(r.eigenvalues[0], 1.0, 1e-12);
  EXPECT_NEAR(r.eigenvalues[1], 3.0, 1e-12);
  const auto d = dense_lowest(Eigen::MatrixXd(a), 2);
  EXPECT_NEAR(d.eigenvalues[0], 1.0, 1e-14);
  EXPECT_NEAR(d.eigenvalues[1], 3.0, 1e-14);
}

TEST(Iterative, MatchesDenseOnSmallCorpus) {
  std::vector<DiscreteOperator> ops;
  ops.push_back(harmonic_line(801, 8));
  ops.push_back(assemble_1d(Expr::parse("t^4", {"t"}), Grid({Axis{5, 1001}}), 1.0, 2));
  ops.push_back(assemble_ambient(Expr::parse("(x^2+y^2-1)^2*(2+x)", {"x", "y"}), 0.3, Grid({Axis{2, 41}, Axis{2, 41}}), 4));
  ModelDescription d;
  d.f_expr = "1 + x^2";
  d.g_expr = "y^2";
  ops.push_back(assemble_fibered(validate_model(d), h_of_hbar(0.2, 2), Grid({Axis{3, 41}, Axis{5, 51}}), 4));
  for (const auto& op : ops) {
    const auto it = iterative_lowest(op, 6);
    const auto de = dense_lowest(op, 6, false);
    for (int k = 0; k < 6; ++k) EXPECT_NEAR(it.eigenvalues[k], de.eigenvalues[k], 1e-9) << op.description();
  }
}

TEST(Iterative, ResidualContract) {
  ModelDescription d;
  d.f_expr = "1 + x^2";
  d.g_expr = "y^2";
  const auto op = assemble_fibered(validate_model(d), h_of_hbar(0.1, 2), Grid({Axis{5, 201}, Axis{8, 201}}), 4);
  IterativeOptions o;
  o.tolerance = 1e-8;
  const auto r = iterative_lowest(op, 5, o);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_LE(r.residuals[k], 1e-8);
    EXPECT_NEAR(residual_norm(op.matrix(), r.vectors.col(static_cast<Eigen::Index>(k)), r.eigenvalues[k]),
                r.residuals[k], 1e-12);
  }
}

TEST(Iterative, DeterministicForSeed) {
  const auto op = assemble_1d(Expr::parse("t^4 + t", {"t"}), Grid({Axis{5, 801}}), 1.0, 4);
  IterativeOptions o;
  o.seed = 42;
  const auto a = iterative_lowest(op, 4, o);
  const auto b = iterative_lowest(op, 4, o);
  EXPECT_EQ(a.eigenvalues, b.eigenvalues);
  EXPECT_EQ(a.residuals, b.residuals);
}

TEST(Iterative, NearestToShift) {
  const auto r = iterative_nearest(harmonic_line(1201), 3, 10.2);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_NEAR(r.eigenvalues[0], 9.0, 1e-6);
  EXPECT_NEAR(r.eigenvalues[1], 11.0, 1e-6);
  EXPECT_NEAR(r.eigenvalues[2], 13.0, 1e-6);
}

TEST(Iterative, NonnegativePerturbationRaisesLevels) {
  const auto base = assemble_1d(Expr::parse("t^2", {"t"}), Grid({Axis{6, 301}}), 1.0, 4);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  const auto r0 = dense_lowest(base, 5, false);
  for (int trial = 0; trial < 5; ++trial) {
    SparseMatrix m = base.matrix();
    for (int i = 0; i < m.rows(); ++i) m.coeffRef(i, i) += u(rng);
    const auto r1 = dense_lowest(Eigen::MatrixXd(m), 5, false);
    for (int k = 0; k < 5; ++k) EXPECT_GE(r1.eigenvalues[k], r0.eigenvalues[k] - 1e-12);
  }
}

TEST(Dense, RejectsLargeOperators) {
  EXPECT_THROW(dense_lowest(harmonic_line(4001), 1), Error);
}

TEST(Clusters, SplitsAtGap) {
  const auto c = cluster_eigenvalues(std::vector<double>{1.0, 1.0000001, 3.0}, 1e-3);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].first, 0u);
  EXPECT_EQ(c[0].count, 2u);
  EXPECT_EQ(c[1].first, 2u);
  EXPECT_EQ(c[1].count, 1u);
  EXPECT_NEAR(c[0].mean, 1.00000005, 1e-15);
}

TEST(Clusters, IsotropicOscillatorMultiplicities) {
  const auto op = assemble_ambient(Expr::parse("x^2 + y^2", {"x", "y"}), 1.0, Grid({Axis{7, 57}, Axis{7, 57}}), 4);
  const auto r = dense_lowest(op, 10, false);
  const auto c = cluster_eigenvalues(r, 0.3);
  ASSERT_GE(c.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(c[i].count, i + 1);
    EXPECT_NEAR(c[i].mean, 2.0 * (i + 1), 0.05);
  }
}

TEST(Clusters, QuarticLevelsAreSimple) {
  const auto op = assemble_1d(Expr::parse("t^4", {"t"}), Grid({Axis{6, 1201}}), 1.0, 4);
  const auto c = cluster_eigenvalues(dense_lowest(op, 8, false), 1e-3);
  EXPECT_EQ(c.size(), 8u);
}
