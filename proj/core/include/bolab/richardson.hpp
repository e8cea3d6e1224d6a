#pragma once

#include <cmath>

namespace bolab {

/// Two-grid extrapolation for a quantity with leading error C * spacing^order,
/// where the fine grid has half the spacing of the coarse one.
struct Extrapolated {
  double value = 0.0;   ///< extrapolated estimate
  double budget = 0.0;  ///< estimated error of the fine-grid value
  double coarse = 0.0;
  double fine = 0.0;
};

inline Extrapolated richardson(double coarse, double fine, int order) {
  const double factor = std::ldexp(1.0, order);  // 2^order
  Extrapolated out;
  out.coarse = coarse;
  out.fine = fine;
  out.value = (factor * fine - coarse) / (factor - 1.0);
  out.budget = std::abs(fine - coarse) / (factor - 1.0);
  return out;
}

}  // namespace bolab
