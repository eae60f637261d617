#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"

namespace cdp {

/// Axis-aligned uniform discretization of a box, enumerated row-major
/// (last axis varies fastest).
class RegularGrid {
 public:
  RegularGrid() = default;
  RegularGrid(std::vector<double> lower, std::vector<double> upper,
              std::vector<std::size_t> points_per_axis);

  static RegularGrid line(double lower, double upper, std::size_t points);

  std::size_t dim() const { return lower_.size(); }
  std::size_t size() const { return size_; }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  const std::vector<std::size_t>& points_per_axis() const { return points_; }
  const std::vector<double>& spacing() const { return spacing_; }
  std::size_t points(std::size_t axis) const { return points_[axis]; }
  std::size_t stride(std::size_t axis) const { return strides_[axis]; }

  /// Coordinate of the i-th point along an axis. The last point is the upper
  /// bound exactly, so endpoints never pick up rounding drift.
  double coord(std::size_t axis, std::size_t i) const {
    if (i + 1 == points_[axis]) return upper_[axis];
    return lower_[axis] + static_cast<double>(i) * spacing_[axis];
  }
  std::vector<double> axis_coords(std::size_t axis) const;

  std::size_t linearize(std::span<const std::size_t> multi_index) const;
  std::vector<std::size_t> delinearize(std::size_t flat) const;
  void delinearize(std::size_t flat, std::span<std::size_t> out) const;

  std::vector<double> point(std::size_t flat) const;
  void point(std::size_t flat, std::span<double> out) const;

  bool contains(std::span<const double> x, double tol = 0.0) const;

  friend bool operator==(const RegularGrid& a, const RegularGrid& b) {
    return a.lower_ == b.lower_ && a.upper_ == b.upper_ && a.points_ == b.points_;
  }

 private:
  std::vector<double> lower_, upper_, spacing_;
  std::vector<std::size_t> points_, strides_;
  std::size_t size_ = 0;
};

/// Half the Euclidean norm of the spacing vector: the farthest any box point
/// can be from its nearest grid point.
double hausdorff_to_box(const RegularGrid& grid);

/// max(largest pairwise point distance, largest point norm).
double diameter(const RegularGrid& grid);

/// Largest Euclidean norm of any point of the grid's box.
double max_norm(const RegularGrid& grid);

/// Product of a discretized continuous block and an integer block. The
/// continuous axes come first in the combined grid.
struct MixedSpace {
  std::optional<RegularGrid> continuous;
  std::optional<RegularGrid> integer;

  MixedSpace() = default;
  MixedSpace(std::optional<RegularGrid> cont, std::optional<RegularGrid> integ);

  static MixedSpace continuous_only(RegularGrid g) { return {std::move(g), std::nullopt}; }
  static MixedSpace integer_only(RegularGrid g) { return {std::nullopt, std::move(g)}; }

  std::size_t continuous_dim() const { return continuous ? continuous->dim() : 0; }
  std::size_t integer_dim() const { return integer ? integer->dim() : 0; }
  std::size_t dim() const { return continuous_dim() + integer_dim(); }

  /// The combined grid over all d_r + d_i axes.
  RegularGrid product() const;
};

void to_json(nlohmann::json& j, const RegularGrid& g);
void from_json(const nlohmann::json& j, RegularGrid& g);
void to_json(nlohmann::json& j, const MixedSpace& s);
void from_json(const nlohmann::json& j, MixedSpace& s);

}  // namespace cdp
