#include "bolab/fit.hpp"

#include <cmath>
#include <cstdio>

#include "bolab/error.hpp"

namespace bolab {

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::InvalidParameter, "fit_line needs matching x and y");
  if (x.size() < 2) throw Error(ErrorCode::InsufficientPoints, "a line needs at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::InsufficientPoints, "all abscissae coincide");
  LineFit out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - out.intercept - out.slope * x[i];
    ss += r * r;
  }
  out.residual = std::sqrt(ss / n);
  out.points = x.size();
  return out;
}

SlopeFit fit_slope(std::span<const std::pair<double, double>> points) {
  SlopeFit out;
  std::vector<double> lx;
  std::vector<double> ly;
  for (const auto& [h, err] : points) {
    if (!(h > 0.0)) throw Error(ErrorCode::InvalidParameter, "fit_slope needs positive h");
    if (err == 0.0) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "error is exactly zero at h = %.6g; point dropped", h);
      out.notes.emplace_back(buf);
      continue;
    }
    if (!(err > 0.0)) throw Error(ErrorCode::NonPositiveError, "fit_slope needs positive errors");
    lx.push_back(std::log(h));
    ly.push_back(std::log(err));
  }
  if (lx.size() < 3) {
    throw Error(ErrorCode::InsufficientPoints,
                "slope fit needs at least 3 points, got " + std::to_string(lx.size()));
  }
  const LineFit line = fit_line(lx, ly);
  out.slope = line.slope;
  out.intercept = line.intercept;
  out.residual = line.residual;
  out.points = line.points;
  return out;
}

}  // namespace bolab
