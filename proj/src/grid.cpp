#include "cdp/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cdp/errors.hpp"

namespace cdp {

RegularGrid::RegularGrid(std::vector<double> lower, std::vector<double> upper,
                         std::vector<std::size_t> points_per_axis)
    : lower_(std::move(lower)), upper_(std::move(upper)), points_(std::move(points_per_axis)) {
  const std::size_t d = lower_.size();
  if (d == 0) throw BadParams("grid needs at least one axis");
  if (upper_.size() != d || points_.size() != d)
    throw BadParams("grid lower/upper/points_per_axis lengths differ");
  spacing_.resize(d);
  strides_.resize(d);
  size_ = 1;
  for (std::size_t a = 0; a < d; ++a) {
    if (!std::isfinite(lower_[a]) || !std::isfinite(upper_[a]))
      throw BadParams("grid bounds must be finite");
    if (lower_[a] > upper_[a]) throw BadParams("grid lower bound exceeds upper bound");
    if (points_[a] == 0) throw BadParams("grid axis needs at least one point");
    if (points_[a] == 1 && lower_[a] != upper_[a])
      throw BadParams("single-point axis needs lower == upper");
    spacing_[a] = points_[a] > 1 ? (upper_[a] - lower_[a]) / static_cast<double>(points_[a] - 1) : 0.0;
  }
  for (std::size_t a = d; a-- > 0;) {
    strides_[a] = size_;
    size_ *= points_[a];
  }
}

RegularGrid RegularGrid::line(double lower, double upper, std::size_t points) {
  return RegularGrid({lower}, {upper}, {points});
}

std::vector<double> RegularGrid::axis_coords(std::size_t axis) const {
  std::vector<double> c(points_[axis]);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = coord(axis, i);
  return c;
}

std::size_t RegularGrid::linearize(std::span<const std::size_t> m) const {
  if (m.size() != dim()) throw IndexError("multi-index has wrong dimension");
  std::size_t flat = 0;
  for (std::size_t a = 0; a < m.size(); ++a) {
    if (m[a] >= points_[a])
      throw IndexError("index " + std::to_string(m[a]) + " out of range on axis " + std::to_string(a));
    flat += m[a] * strides_[a];
  }
  return flat;
}

void RegularGrid::delinearize(std::size_t flat, std::span<std::size_t> out) const {
  if (flat >= size_) throw IndexError("flat index " + std::to_string(flat) + " out of range");
  for (std::size_t a = 0; a < dim(); ++a) {
    out[a] = flat / strides_[a];
    flat %= strides_[a];
  }
}

std::vector<std::size_t> RegularGrid::delinearize(std::size_t flat) const {
  std::vector<std::size_t> m(dim());
  delinearize(flat, m);
  return m;
}

void RegularGrid::point(std::size_t flat, std::span<double> out) const {
  if (flat >= size_) throw IndexError("flat index out of range");
  for (std::size_t a = 0; a < dim(); ++a) {
    out[a] = coord(a, flat / strides_[a]);
    flat %= strides_[a];
  }
}

std::vector<double> RegularGrid::point(std::size_t flat) const {
  std::vector<double> x(dim());
  point(flat, x);
  return x;
}

bool RegularGrid::contains(std::span<const double> x, double tol) const {
  for (std::size_t a = 0; a < dim(); ++a)
    if (x[a] < lower_[a] - tol || x[a] > upper_[a] + tol) return false;
  return true;
}

double hausdorff_to_box(const RegularGrid& grid) {
  double s = 0.0;
  for (double h : grid.spacing()) s += h * h;
  return 0.5 * std::sqrt(s);
}

double max_norm(const RegularGrid& grid) {
  double s = 0.0;
  for (std::size_t a = 0; a < grid.dim(); ++a) {
    const double m = std::max(std::abs(grid.lower()[a]), std::abs(grid.upper()[a]));
    s += m * m;
  }
  return std::sqrt(s);
}

double diameter(const RegularGrid& grid) {
  // The box corners realise both maxima and are grid points.
  double span = 0.0;
  for (std::size_t a = 0; a < grid.dim(); ++a) {
    const double w = grid.upper()[a] - grid.lower()[a];
    span += w * w;
  }
  return std::max(std::sqrt(span), max_norm(grid));
}

namespace {
constexpr double kExactIntegerLimit = 9007199254740992.0;  // 2^53

void check_integer_block(const RegularGrid& g) {
  for (std::size_t a = 0; a < g.dim(); ++a) {
    const double lo = g.lower()[a], hi = g.upper()[a], h = g.spacing()[a];
    if (std::abs(lo) > kExactIntegerLimit || std::abs(hi) > kExactIntegerLimit)
      throw BadParams("integer block coordinate exceeds 2^53");
    if (lo != std::floor(lo) || hi != std::floor(hi) || h != std::floor(h))
      throw BadParams("integer block needs integral bounds and spacing");
  }
}
}  // namespace

MixedSpace::MixedSpace(std::optional<RegularGrid> cont, std::optional<RegularGrid> integ)
    : continuous(std::move(cont)), integer(std::move(integ)) {
  if (!continuous && !integer) throw BadParams("mixed space needs at least one block");
  if (integer) check_integer_block(*integer);
}

RegularGrid MixedSpace::product() const {
  if (!integer) return *continuous;
  if (!continuous) return *integer;
  std::vector<double> lo = continuous->lower(), hi = continuous->upper();
  std::vector<std::size_t> n = continuous->points_per_axis();
  lo.insert(lo.end(), integer->lower().begin(), integer->lower().end());
  hi.insert(hi.end(), integer->upper().begin(), integer->upper().end());
  n.insert(n.end(), integer->points_per_axis().begin(), integer->points_per_axis().end());
  return RegularGrid(std::move(lo), std::move(hi), std::move(n));
}

void to_json(nlohmann::json& j, const RegularGrid& g) {
  j = nlohmann::json{{"dim", g.dim()},
                     {"lower", g.lower()},
                     {"upper", g.upper()},
                     {"points_per_axis", g.points_per_axis()}};
}

void from_json(const nlohmann::json& j, RegularGrid& g) {
  auto lo = j.at("lower").get<std::vector<double>>();
  auto hi = j.at("upper").get<std::vector<double>>();
  auto n = j.at("points_per_axis").get<std::vector<std::size_t>>();
  if (j.contains("dim") && j.at("dim").get<std::size_t>() != lo.size())
    throw BadParams("grid json: dim does not match bounds");
  g = RegularGrid(std::move(lo), std::move(hi), std::move(n));
}

void to_json(nlohmann::json& j, const MixedSpace& s) {
  j = nlohmann::json::object();
  if (s.continuous) j["continuous"] = *s.continuous;
  if (s.integer) j["integer"] = *s.integer;
}

void from_json(const nlohmann::json& j, MixedSpace& s) {
  std::optional<RegularGrid> c, i;
  if (j.contains("continuous")) c = j.at("continuous").get<RegularGrid>();
  if (j.contains("integer")) i = j.at("integer").get<RegularGrid>();
  // A bare grid object is read as a purely continuous space.
  if (!c && !i && j.contains("lower")) c = j.get<RegularGrid>();
  s = MixedSpace(std::move(c), std::move(i));
}

}  // namespace cdp
