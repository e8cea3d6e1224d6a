#include <algorithm>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>
#include <unsupported/Eigen/KroneckerProduct>

#include "bolab/discretize.hpp"
#include "bolab/eigensolve.hpp"
#include "bolab/error.hpp"
#include "bolab/model.hpp"
#include "bolab/richardson.hpp"

using namespace bolab;

namespace {

constexpr double kPi = std::numbers::pi;
// Ground level of -d^2/dt^2 + t^4, known to many digits from the literature.
constexpr double kQuarticGround = 1.0603620904841829;

ModelSpec standard_model() {
  ModelDescription d;
  d.f_expr = "1 + x^2";
  d.g_expr = "y^2";
  return validate_model(d);
}

Grid line(double half, int points) { return Grid({Axis{half, points}}); }

}  // namespace

TEST(Assemble1d, HarmonicGround) {
  const auto op = assemble_1d(Expr::parse("t^2", {"t"}), line(10, 2001), 1.0, 4);
  const auto r = iterative_lowest(op, 1);
  EXPECT_NEAR(r.eigenvalues[0], 1.0, 1e-8);
}

// All grid points are unknowns, so the walls sit one spacing beyond the end
// points. The order-4 stencil treats values beyond the wall as zero, which is
// only accurate for functions that have decayed there; a bare box uses order 2.
TEST(Assemble1d, DirichletBox) {
  const Axis ax = line(1.0, 401).axis(0);
  const double L = ax.half_extent + ax.spacing();
  const auto op = assemble_1d(Expr::parse("0", {"t"}), Grid({ax}), 1.0, 2);
  const auto r = dense_lowest(op, 3, false);
  for (int k = 1; k <= 3; ++k) {
    const double exact = k * k * kPi * kPi / (4 * L * L);
    EXPECT_NEAR(r.eigenvalues[k - 1], exact, 1e-4 * exact);
  }
}

TEST(Assemble1d, QuarticTwoGridAgainstReference) {
  const Expr v = Expr::parse("t^4", {"t"});
  const auto coarse = dense_lowest(assemble_1d(v, line(6, 1001), 1.0, 4), 3, false);
  const auto fine = dense_lowest(assemble_1d(v, line(6, 2001), 1.0, 4), 3, false);
  const Extrapolated e = richardson(coarse.eigenvalues[0], fine.eigenvalues[0], 4);
  EXPECT_NEAR(e.value, kQuarticGround, 1e-8);
  EXPECT_LT(e.budget, 1e-8);
}

TEST(Assemble1d, OrdersAgreeAfterExtrapolation) {
  const Expr v = Expr::parse("t^4", {"t"});
  Extrapolated by_order[2];
  for (int i = 0; i < 2; ++i) {
    const int order = 2 + 2 * i;
    const auto c = dense_lowest(assemble_1d(v, line(6, 601), 1.0, order), 1, false);
    const auto f = dense_lowest(assemble_1d(v, line(6, 1201), 1.0, order), 1, false);
    by_order[i] = richardson(c.eigenvalues[0], f.eigenvalues[0], order);
  }
  EXPECT_LE(std::abs(by_order[0].value - by_order[1].value), 10 * std::max(by_order[0].budget, by_order[1].budget));
}

TEST(Assemble, ExactlySymmetric) {
  const ModelSpec m = standard_model();
  const Grid g({Axis{3, 31}, Axis{4, 41}});
  EXPECT_EQ(assemble_fibered(m, h_of_hbar(0.3, 2), g, 4).symmetry_defect(), 0.0);
  EXPECT_EQ(assemble_ambient(Expr::parse("(x^2+y^2-1)^2*(2+x)", {"x", "y"}), 0.1, g, 4).symmetry_defect(), 0.0);
  EXPECT_EQ(assemble_1d(Expr::parse("t^6", {"t"}), line(3, 61), 1.0, 2).symmetry_defect(), 0.0);
}

// hbar^2 Lx (x) I + I (x) Ly + diag(f g), built from 1D pieces.
TEST(AssembleFibered, KroneckerStructure) {
  const ModelSpec m = standard_model();
  const double hbar = 0.37;
  const Axis ax{3, 17};
  const Axis ay{4, 21};
  const Grid g({ax, ay});
  const auto full = assemble_fibered(m, h_of_hbar(hbar, 2), g, 4);
  const Expr zero = Expr::parse("0", {"t"});
  const SparseMatrix lx = assemble_1d(zero, Grid({ax}), 1.0, 4).matrix();
  const SparseMatrix ly = assemble_1d(zero, Grid({ay}), 1.0, 4).matrix();
  SparseMatrix ix(ax.points, ax.points), iy(ay.points, ay.points);
  ix.setIdentity();
  iy.setIdentity();
  Eigen::MatrixXd expected = hbar * hbar * Eigen::kroneckerProduct(Eigen::MatrixXd(lx), Eigen::MatrixXd(iy)) +
                             Eigen::kroneckerProduct(Eigen::MatrixXd(ix), Eigen::MatrixXd(ly));
  for (std::size_t p = 0; p < g.size(); ++p) {
    expected(p, p) += m.f({g.coordinate(p, 0)}) * m.g({g.coordinate(p, 1)});
  }
  EXPECT_LE((Eigen::MatrixXd(full.matrix()) - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AssembleFibered, SeparableWhenFConstant) {
  ModelSpec m = standard_model();
  m.f = Expr::parse("1 + 0*x", {"x"});
  const double hbar = 0.5;
  const Axis ax{2, 21};
  const Axis ay{6, 81};
  const auto full = dense_lowest(assemble_fibered(m, h_of_hbar(hbar, 2), Grid({ax, ay}), 4), 6, false);
  const auto x = dense_lowest(assemble_1d(Expr::parse("0", {"t"}), Grid({ax}), hbar * hbar, 4), 6, false);
  const auto y = dense_lowest(assemble_1d(Expr::parse("t^2", {"t"}), Grid({ay}), 1.0, 4), 6, false);
  std::vector<double> sums;
  for (double a : x.eigenvalues) {
    for (double b : y.eigenvalues) sums.push_back(a + b);
  }
  std::sort(sums.begin(), sums.end());
  for (int k = 0; k < 6; ++k) EXPECT_NEAR(full.eigenvalues[k], sums[k], 1e-10);
}

TEST(AssembleFibered, StandardModelGround) {
  const ModelSpec m = standard_model();
  const Grid g({Axis{4, 201}, Axis{8, 201}});
  const auto r = iterative_lowest(assemble_fibered(m, h_of_hbar(0.1, 2), g, 4), 1);
  // First-order prediction up to O(hbar^2), and above mu_1 = 1.
  EXPECT_NEAR(r.eigenvalues[0], 1.0 + 0.1 * std::sqrt(2.0) / 2, 0.5 * 0.1 * 0.1);
  EXPECT_GT(r.eigenvalues[0], 1.0);
}

TEST(AssembleAmbient, HarmonicGround) {
  const Expr v = Expr::parse("x^2 + y^2", {"x", "y"});
  IterativeOptions o;
  o.store_vectors = false;
  const auto c = iterative_lowest(assemble_ambient(v, 1.0, Grid({Axis{8, 161}, Axis{8, 161}}), 4), 1, o);
  const auto f = iterative_lowest(assemble_ambient(v, 1.0, Grid({Axis{8, 321}, Axis{8, 321}}), 4), 1, o);
  EXPECT_NEAR(richardson(c.eigenvalues[0], f.eigenvalues[0], 4).value, 2.0, 1e-6);
}

TEST(AssembleAmbient, DirichletSquare) {
  const Axis ax{kPi / 2, 61};
  const double L = ax.half_extent + ax.spacing();
  const auto r = dense_lowest(assemble_ambient(Expr::parse("0", {"x", "y"}), 1.0, Grid({ax, ax}), 2), 4, false);
  const double unit = kPi * kPi / (4 * L * L);
  const double exact[4] = {2 * unit, 5 * unit, 5 * unit, 8 * unit};
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(r.eigenvalues[k], exact[k], 1e-3 * exact[k]);
}

TEST(Assemble, DimensionCap) {
  EXPECT_THROW(assemble_ambient(Expr::parse("x^2+y^2", {"x", "y"}), 1.0, Grid({Axis{4, 101}, Axis{4, 101}}), 4, 1000),
               Error);
}

TEST(Extent, TransverseThresholdRule) {
  EXPECT_GE(transverse_threshold_extent(Expr::parse("y^2", {"y"}), 9.0, 60.0), 6.0);
  EXPECT_LT(transverse_threshold_extent(Expr::parse("y^2", {"y"}), 9.0, 60.0), 6.01);
}

TEST(Extent, ShrinksAsHbarDecreases) {
  const ModelSpec m = standard_model();
  const std::vector<double> mu{1.0, 3.0};
  double previous = std::numeric_limits<double>::infinity();
  for (double hb : {0.4, 0.2, 0.1, 0.05}) {
    const auto e = choose_extent(m, h_of_hbar(hb, 2), mu, 1, 3);
    EXPECT_LE(e[0], previous);
    previous = e[0];
  }
}

// Doubling each chosen extent at fixed spacing leaves the relevant 1D spectra unchanged.
TEST(Extent, DomainInsensitivity) {
  const ModelSpec m = standard_model();
  const double hbar = 0.1;
  const std::vector<double> mu{1.0};
  const auto extent = choose_extent(m, h_of_hbar(hbar, 2), mu, 1, 3);
  const double dx = 0.02;
  const double dy = 0.02;
  auto reduced = [&](double L) {
    const int n = 2 * static_cast<int>(std::lround(L / dx)) + 1;
    return dense_lowest(assemble_1d(Expr::parse("sqrt(1 + t^2)", {"t"}), line(L, n), hbar * hbar, 4), 3, false);
  };
  auto transverse = [&](double L) {
    const int n = 2 * static_cast<int>(std::lround(L / dy)) + 1;
    return dense_lowest(assemble_1d(Expr::parse("t^2", {"t"}), line(L, n), 1.0, 4), 3, false);
  };
  const double lx = std::round(extent[0] / dx) * dx;
  const double ly = std::round(extent[1] / dy) * dy;
  const auto rx1 = reduced(lx), rx2 = reduced(2 * lx);
  const auto ry1 = transverse(ly), ry2 = transverse(2 * ly);
  for (int k = 0; k < 3; ++k) {
    EXPECT_LT(std::abs(rx1.eigenvalues[k] - rx2.eigenvalues[k]), 1e-10) << "x level " << k;
    EXPECT_LT(std::abs(ry1.eigenvalues[k] - ry2.eigenvalues[k]), 1e-10) << "y level " << k;
  }
}

TEST(Extent, AgmonOverflow) {
  EXPECT_THROW(agmon_extent([](double) { return 0.0; }, 1.0, 0.1, 1e-12, 5.0), Error);
}
