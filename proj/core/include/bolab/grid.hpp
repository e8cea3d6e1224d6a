#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace bolab {

/// One axis of a uniform tensor grid: N points spanning [-L, L].
struct Axis {
  double half_extent = 1.0;
  int points = 17;

  double spacing() const { return 2.0 * half_extent / (points - 1); }
  double coordinate(int i) const { return -half_extent + i * spacing(); }
  /// Same extent with spacing halved (2N-1 points).
  Axis refined() const { return Axis{half_extent, 2 * points - 1}; }

  bool operator==(const Axis&) const = default;
};

/// Uniform tensor grid, row-major (last axis varies fastest). Every axis has
/// an odd point count so the origin is a grid point.
class Grid {
 public:
  Grid() = default;
  explicit Grid(std::vector<Axis> axes);

  std::size_t dimension() const noexcept { return axes_.size(); }
  std::size_t size() const noexcept { return size_; }
  const Axis& axis(std::size_t a) const { return axes_.at(a); }
  const std::vector<Axis>& axes() const noexcept { return axes_; }
  std::size_t stride(std::size_t a) const { return strides_.at(a); }

  /// Per-axis index of a flat point index.
  int index_along(std::size_t flat, std::size_t a) const {
    return static_cast<int>((flat / strides_[a]) % static_cast<std::size_t>(axes_[a].points));
  }
  double coordinate(std::size_t flat, std::size_t a) const { return axes_[a].coordinate(index_along(flat, a)); }

  Grid refined() const;
  std::string describe() const;

  bool operator==(const Grid& other) const { return axes_ == other.axes_; }

 private:
  std::vector<Axis> axes_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

/// Smallest odd point count (at least 17) whose spacing on [-L, L] does not
/// exceed `max_spacing`.
int points_for_spacing(double half_extent, double max_spacing);

}  // namespace bolab
