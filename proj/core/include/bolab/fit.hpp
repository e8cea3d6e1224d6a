#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace bolab {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  ///< root-mean-square deviation from the line
  std::size_t points = 0;
};

/// Ordinary least squares y = intercept + slope * x.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;  ///< natural log of the prefactor
  double residual = 0.0;
  std::size_t points = 0;
  std::vector<std::string> notes;
};

/// Least-squares line through (log h, log err). Errors of exactly zero are
/// dropped with a note; negative errors raise NonPositiveError and fewer than
/// three usable points raise InsufficientPoints.
SlopeFit fit_slope(std::span<const std::pair<double, double>> points);

}  // namespace bolab
