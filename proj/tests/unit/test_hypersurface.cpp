#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "bolab/error.hpp"
#include "bolab/hypersurface.hpp"

using namespace bolab;

namespace {

constexpr double kPi = std::numbers::pi;

Curve circle(int orientation = 1) {
  return build_gamma(Expr::parse("cos(t)", {"t"}), Expr::parse("sin(t)", {"t"}), orientation);
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::IOError;
}

std::vector<double> samples(const std::function<double(double)>& f, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(f(2 * kPi * i / n));
  return out;
}

const SurfaceWell& circle_well() {
  static const SurfaceWell w =
      make_surface_well(Expr::parse("(x^2+y^2-1)^2*(2+x*exp(-(x^2+y^2-1)^8))", {"x", "y"}), 1, circle());
  return w;
}

}  // namespace

TEST(Gamma, UnitCircle) {
  const Curve c = circle();
  ASSERT_EQ(c.points.size(), 256u);
  for (const auto& p : c.points) {
    EXPECT_NEAR(p.nx, p.x, 1e-14);
    EXPECT_NEAR(p.ny, p.y, 1e-14);
    EXPECT_NEAR(p.arc, 1.0, 1e-14);
    EXPECT_NEAR(p.curvature, 1.0, 1e-12);
  }
}

TEST(Gamma, Ellipse) {
  const Curve c = build_gamma(Expr::parse("2*cos(t)", {"t"}), Expr::parse("sin(t)", {"t"}));
  for (const auto& p : c.points) {
    EXPECT_NEAR(std::hypot(p.nx, p.ny), 1.0, 1e-14);
    const double s = std::sin(p.theta);
    const double co = std::cos(p.theta);
    EXPECT_NEAR(p.arc, std::sqrt(4 * s * s + co * co), 1e-14);
    EXPECT_GT(p.x * p.nx + p.y * p.ny, 0.0);
  }
}

TEST(Gamma, FigureEightRejected) {
  EXPECT_EQ(code_of([] { build_gamma(Expr::parse("sin(t)", {"t"}), Expr::parse("sin(t)*cos(t)", {"t"})); }),
            ErrorCode::DegenerateParametrization);
}

TEST(Gamma, OpenCurveRejected) {
  EXPECT_EQ(code_of([] { build_gamma(Expr::parse("cos(t/2)", {"t"}), Expr::parse("sin(t/2)", {"t"})); }),
            ErrorCode::DegenerateParametrization);
}

TEST(Gamma, StationaryPointRejected) {
  EXPECT_EQ(code_of([] { build_gamma(Expr::parse("cos(t)^3", {"t"}), Expr::parse("sin(t)^3", {"t"})); }),
            ErrorCode::DegenerateParametrization);
}

// (|z|^2 - 1)^2 = t^2 (2 + t)^2 along the outward normal, so f = 4 w on the circle.
TEST(ExtractF, CircleWellProfile) {
  const Expr V = Expr::parse("(x^2+y^2-1)^2*(2+x)", {"x", "y"});
  const Curve c = circle();
  for (std::size_t i = 0; i < c.points.size(); i += 16) {
    const auto& p = c.points[i];
    const double pt[2] = {p.x, p.y};
    const double n[2] = {p.nx, p.ny};
    EXPECT_NEAR(extract_f(V, 1, pt, n, 0.02), 4 * (2 + std::cos(p.theta)), 1e-6 * 12);
  }
  const double pt[2] = {1.0, 0.0};
  const double n[2] = {1.0, 0.0};
  EXPECT_NEAR(extract_f(V, 1, pt, n, 0.02), 12.0, 1e-6 * 12);
}

// V = d(z, circle)^{2m} w(z) has profile w on the circle.
TEST(ExtractF, DistanceFamilies) {
  const Curve c = circle();
  for (int m : {1, 2}) {
    for (const char* w : {"2 + x", "3 + x*y", "exp(x) + y^2"}) {
      const std::string text = "(sqrt(x^2+y^2) - 1)^" + std::to_string(2 * m) + "*(" + w + ")";
      const Expr V = Expr::parse(text, {"x", "y"});
      const Expr W = Expr::parse(w, {"x", "y"});
      for (std::size_t i = 0; i < c.points.size(); i += 32) {
        const auto& p = c.points[i];
        const double pt[2] = {p.x, p.y};
        const double n[2] = {p.nx, p.ny};
        const double expected = W({p.x, p.y});
        EXPECT_NEAR(extract_f(V, m, pt, n, 0.02), expected, 1e-6 * expected) << text;
      }
    }
  }
}

TEST(ExtractF, FlatLine) {
  const double pt[2] = {0.3, 0.0};
  const double n[2] = {0.0, 1.0};
  EXPECT_NEAR(extract_f(Expr::parse("y^2", {"x", "y"}), 1, pt, n, 0.02), 1.0, 1e-12);
}

TEST(ExtractF, WrongOrderRejected) {
  const double pt[2] = {0.3, 0.0};
  const double n[2] = {0.0, 1.0};
  EXPECT_EQ(code_of([&] { extract_f(Expr::parse("y^4", {"x", "y"}), 1, pt, n, 0.02); }), ErrorCode::OrderMismatch);
  EXPECT_EQ(code_of([&] { extract_f(Expr::parse("y^2 + y", {"x", "y"}), 1, pt, n, 0.02); }), ErrorCode::OrderMismatch);
}

TEST(FindMinima, SingleMinimum) {
  const auto f = samples([](double t) { return 4 * (2 + std::cos(t)); }, 256);
  const std::vector<double> arc(256, 1.0);
  const auto r = find_minima(f, arc);
  EXPECT_NEAR(r.eta0, 4.0, 1e-12);
  ASSERT_EQ(r.minima.size(), 1u);
  EXPECT_NEAR(r.minima[0].theta, kPi, 1e-10);
  EXPECT_NEAR(r.minima[0].rho2, 2.0, 1e-10);
  EXPECT_NEAR(r.minima[0].rho, std::sqrt(2.0), 1e-10);
}

TEST(FindMinima, ArcLengthScaling) {
  const auto f = samples([](double t) { return 4 * (2 + std::cos(t)); }, 128);
  const std::vector<double> arc(128, 2.0);
  EXPECT_NEAR(find_minima(f, arc).minima[0].rho2, 0.5, 1e-10);
}

TEST(FindMinima, Constant) {
  const std::vector<double> f(64, 3.0);
  const std::vector<double> arc(64, 1.0);
  EXPECT_EQ(code_of([&] { find_minima(f, arc); }), ErrorCode::ContinuumOfMinima);
}

TEST(FindMinima, TwoWells) {
  const auto f = samples([](double t) { return 4 + std::cos(2 * t); }, 200);
  const std::vector<double> arc(200, 1.0);
  const auto r = find_minima(f, arc);
  ASSERT_EQ(r.minima.size(), 2u);
  EXPECT_NEAR(r.minima[0].theta, kPi / 2, 1e-10);
  EXPECT_NEAR(r.minima[1].theta, 3 * kPi / 2, 1e-10);
  EXPECT_NEAR(r.minima[0].rho, r.minima[1].rho, 1e-10);
  EXPECT_NEAR(r.eta0, 3.0, 1e-12);
}

TEST(FindMinima, FlatBottomRejected) {
  const auto f = samples([](double t) { return 1 + std::pow(std::cos(t) + 1, 3); }, 256);
  const std::vector<double> arc(256, 1.0);
  EXPECT_THROW(find_minima(f, arc), Error);
}

TEST(SurfaceWell, CircleExtraction) {
  const SurfaceWell& w = circle_well();
  EXPECT_NEAR(w.eta0, 4.0, 1e-4);
  ASSERT_EQ(w.minima.size(), 1u);
  EXPECT_NEAR(w.minima[0].theta, kPi, 1e-6);
  EXPECT_NEAR(w.minima[0].rho, std::sqrt(2.0), 1e-4);
}

TEST(SurfaceWell, OrientationFlipInvariant) {
  const Expr V = Expr::parse("(x^2+y^2-1)^2*(2+x*exp(-(x^2+y^2-1)^8))", {"x", "y"});
  const SurfaceWell flipped = make_surface_well(V, 1, circle(-1));
  const SurfaceWell& w = circle_well();
  EXPECT_NEAR(flipped.eta0, w.eta0, 1e-12);
  for (std::size_t i = 0; i < w.f_samples.size(); ++i) EXPECT_NEAR(flipped.f_samples[i], w.f_samples[i], 1e-10);
  EXPECT_NEAR(flipped.minima[0].rho, w.minima[0].rho, 1e-10);
  EXPECT_NEAR(flipped.minima[0].trplus, w.minima[0].trplus, 1e-10);
}

TEST(SurfaceWell, MustVanishOnCurve) {
  EXPECT_THROW(make_surface_well(Expr::parse("(x^2+y^2-1.1)^2", {"x", "y"}), 1, circle()), Error);
}

TEST(PredictSurface, Coefficients) {
  const SurfaceWell& w = circle_well();
  EXPECT_NEAR(surface_coefficient(w, 0, 1), 1 / std::sqrt(2.0), 1e-4);
  EXPECT_NEAR(surface_coefficient(w, 1, 1), 3 / std::sqrt(2.0), 1e-4);
  for (double h : {0.1, 0.05}) {
    const auto p = predict_surface(w, 1.0, 1, 0, 1, h);
    EXPECT_NEAR(p.value, h * (std::sqrt(w.eta0) + std::sqrt(h) * surface_coefficient(w, 0, 1)), 1e-15);
    EXPECT_NEAR(p.value, h * (2 + std::sqrt(h) / std::sqrt(2.0)), 1e-4 * h);
    EXPECT_TRUE(p.valid());
  }
}

TEST(PredictSurface, LeadingTerm) {
  const SurfaceWell& w = circle_well();
  const double h = 1e-6;
  for (double mu : {1.0, 3.0}) {
    const auto p = predict_surface(w, mu, 1, 1, 1, h);
    const double lead = std::sqrt(w.eta0) * mu;
    EXPECT_NEAR(p.value / h - lead, std::sqrt(h * mu) * surface_coefficient(w, 1, 1), 1e-12);
    EXPECT_NEAR(p.value / h, lead, 1e-2);
  }
}

TEST(PredictSurface, GateRejectsLargeMu) {
  EXPECT_EQ(code_of([] { predict_surface(circle_well(), 50.0, 5, 0, 1, 0.1); }), ErrorCode::OutsideValidity);
}

TEST(PredictSurface, SymmetricWellsCoincide) {
  const SurfaceWell w = make_surface_well(Expr::parse("(x^2+y^2-1)^2*(4+x^2-y^2)/4", {"x", "y"}), 1, circle());
  ASSERT_EQ(w.minima.size(), 2u);
  const auto p1 = predict_surface(w, 1.0, 1, 0, 1, 0.05);
  const auto p2 = predict_surface(w, 1.0, 1, 0, 2, 0.05);
  EXPECT_NEAR(p1.value, p2.value, 1e-9);
}

TEST(PredictSurface, ScaledWellSelfConsistent) {
  const double c = 3.0;
  const SurfaceWell scaled =
      make_surface_well(Expr::parse("3*(x^2+y^2-1)^2*(2+x*exp(-(x^2+y^2-1)^8))", {"x", "y"}), 1, circle());
  const SurfaceWell& w = circle_well();
  EXPECT_NEAR(scaled.eta0, c * w.eta0, 1e-9);
  const double h = 0.05;
  const auto p = predict_surface(scaled, 1.0, 1, 1, 1, h);
  const double a = (2 * scaled.minima[0].rho + scaled.minima[0].trplus) / (std::pow(scaled.eta0, 0.25) * std::sqrt(2.0));
  EXPECT_NEAR(p.value, h * (std::sqrt(scaled.eta0) + std::sqrt(h) * a), 1e-14);
}

TEST(AmbientGrid, CoversTheWell) {
  const Grid g = ambient_grid(circle_well(), 0.05, 0.2, {});
  EXPECT_EQ(g.dimension(), 2u);
  EXPECT_GT(g.axis(0).half_extent, 1.0);
  EXPECT_LE(g.axis(0).spacing(), std::sqrt(0.05) / std::sqrt(2.0) / 6.0 + 1e-12);
}
