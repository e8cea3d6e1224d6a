#include "bolab/grid.hpp"

#include <cmath>
#include <cstdio>

#include "bolab/error.hpp"

namespace bolab {

Grid::Grid(std::vector<Axis> axes) : axes_(std::move(axes)) {
  if (axes_.empty()) throw Error(ErrorCode::InvalidParameter, "grid needs at least one axis");
  for (const auto& ax : axes_) {
    if (ax.points < 17 || ax.points % 2 == 0) {
      throw Error(ErrorCode::InvalidParameter,
                  "axis point count must be odd and >= 17, got " + std::to_string(ax.points));
    }
    if (!(ax.half_extent > 0.0) || !std::isfinite(ax.half_extent)) {
      throw Error(ErrorCode::InvalidParameter, "axis half-extent must be positive and finite");
    }
  }
  strides_.assign(axes_.size(), 1);
  for (std::size_t a = axes_.size() - 1; a > 0; --a) {
    strides_[a - 1] = strides_[a] * static_cast<std::size_t>(axes_[a].points);
  }
  size_ = strides_[0] * static_cast<std::size_t>(axes_[0].points);
}

Grid Grid::refined() const {
  std::vector<Axis> axes;
  axes.reserve(axes_.size());
  for (const auto& ax : axes_) axes.push_back(ax.refined());
  return Grid(std::move(axes));
}

std::string Grid::describe() const {
  std::string out;
  char buf[64];
  for (std::size_t a = 0; a < axes_.size(); ++a) {
    std::snprintf(buf, sizeof buf, "%s[L=%.17g,N=%d]", a ? "x" : "", axes_[a].half_extent, axes_[a].points);
    out += buf;
  }
  return out;
}

int points_for_spacing(double half_extent, double max_spacing) {
  if (!(max_spacing > 0.0)) throw Error(ErrorCode::InvalidParameter, "spacing must be positive");
  const double intervals = std::ceil(2.0 * half_extent / max_spacing - 1e-12);
  long n = static_cast<long>(intervals) + 1;
  if (n % 2 == 0) ++n;
  if (n < 17) n = 17;
  if (n > 1'000'000'000L) throw Error(ErrorCode::SizeError, "axis point count overflows");
  return static_cast<int>(n);
}

}  // namespace bolab
