#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "cdp/grid.hpp"
#include "json.hpp"

namespace cdp {

/// Function values tabulated on a grid, in grid enumeration order.
struct DiscreteFn {
  RegularGrid grid;
  std::vector<double> values;

  DiscreteFn() = default;
  DiscreteFn(RegularGrid g, std::vector<double> v);

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double max_abs() const;
};

/// A regular grid over slope space.
struct DualGrid {
  RegularGrid grid;
};

/// Transform values on the output grid plus, for every output point, the flat
/// index of the (smallest) maximizing input point.
struct Conjugate {
  DiscreteFn fn;
  std::vector<std::size_t> argmax;
};

/// Raw conjugate table over an arbitrary product of per-axis query sets.
struct ConjugateTable {
  std::vector<double> values;
  std::vector<std::size_t> argmax;
};

/// c_i = (f(x_{i+1}) - f(x_i)) / (x_{i+1} - x_i) for a 1-D function.
std::vector<double> discrete_gradients(const DiscreteFn& f);

/// True when every 1-D slice along every axis has nondecreasing discrete
/// gradients, up to c_{i+1} >= c_i - 1e-12 (1 + |c_i|). A positive
/// value_noise (absolute error already present in the values) widens the
/// tolerance by 4 value_noise / spacing.
bool is_axis_convex(const DiscreteFn& f, double value_noise = 0.0);

/// Uniform 1-D dual grid from c_0 to c_{N-2} with K points. value_noise
/// widens the convexity check as in is_axis_convex.
DualGrid canonical_dual_grid(const DiscreteFn& f, std::size_t K, double value_noise = 0.0);

/// Per-axis box from the extreme discrete gradients over all slices, widened by
/// one spacing unit on each side. points_per_axis must have one entry per axis.
DualGrid bounding_dual_grid(const DiscreteFn& f, std::span<const std::size_t> points_per_axis);

/// f*(s) = max_x <s,x> - f(x) by exhaustive search; ties go to the smallest
/// flat index.
Conjugate dlft_bruteforce(const DiscreteFn& f, const DualGrid& duals);

/// Same output as dlft_bruteforce, computed axis by axis with a monotone
/// maximizer scan. Throws NotConvex unless f passes is_axis_convex.
Conjugate dlft_fast(const DiscreteFn& f, const DualGrid& duals);

/// (f*)* evaluated back on f's grid.
DiscreteFn biconjugate(const DiscreteFn& f, const DualGrid& duals);

/// max over duals of |f*(s) - g*(s)|.
double lft_perturbation_gap(const DiscreteFn& f, const DiscreteFn& g, const DualGrid& duals);

// Lower-level kernels shared by the DP operators and the simulator.

/// Conjugate of tabulated values y on `primal`, evaluated on the product of the
/// per-axis query coordinates (each ascending). Values are accumulated as
/// q_{d-1} x_{d-1} - y, then q_a x_a + (...) for a = d-2..0, which is exactly
/// the order the axis passes produce, so the fast and exhaustive kernels agree
/// bit for bit.
ConjugateTable conjugate_product_fast(const RegularGrid& primal, std::span<const double> y,
                                      const std::vector<std::vector<double>>& queries);
/// One 1-D pass over a strided slice: for every query q[j], out[j] = max_i
/// q[j] xs[i] - y[i * ystride] and arg[j] = the maximizing i.
struct SliceTask {
  std::span<const double> xs;
  const double* y;
  std::size_t ystride;
  std::span<const double> q;
  double* out;
  std::size_t* arg;
  std::size_t axis;   // primal axis of this pass
  std::size_t slice;  // slice number within the pass
};
using SliceSolver = std::function<void(const SliceTask&)>;

/// The default solver: monotone maximizer scan with exhaustive fallback on
/// slices that are not convex up to rounding (the gradient dips, weighted by
/// spacing, exceed 5e-11 max|y|).
void scan_slice(const SliceTask& task);

/// The axis-by-axis driver behind conjugate_product_fast with a pluggable
/// per-slice solver. before_pass(axis, slice_count) runs ahead of each pass.
ConjugateTable conjugate_product_with(const RegularGrid& primal, std::span<const double> y,
                                      const std::vector<std::vector<double>>& queries, const SliceSolver& solver,
                                      const std::function<void(std::size_t, std::size_t)>& before_pass = {});

ConjugateTable conjugate_product_bruteforce(const RegularGrid& primal, std::span<const double> y,
                                            const std::vector<std::vector<double>>& queries);

/// Conjugate at an arbitrary list of query points (row-major, dim entries
/// each). Uses the monotone scan in 1-D and exhaustive search otherwise.
ConjugateTable conjugate_at_points(const RegularGrid& primal, std::span<const double> y,
                                   std::span<const double> points);

/// The accumulation used by every conjugate kernel for a single (query, point)
/// pair; exposed so other modules reproduce identical arithmetic.
double pairing_minus(std::span<const double> q, std::span<const double> x, double y);

/// sup over the box of <s,u> - q(u) for q(u) = a|u|^2/2 + <b,u> + c.
/// lower/upper may be infinite. Throws Unbounded when the supremum is +inf.
double clft_quadratic(double a, std::span<const double> b, double c, std::span<const double> lower,
                      std::span<const double> upper, std::span<const double> s);

void to_json(nlohmann::json& j, const DiscreteFn& f);
void from_json(const nlohmann::json& j, DiscreteFn& f);
/// CSV rows: flat_index, x0..x{d-1}, value.
void write_csv(std::ostream& os, const DiscreteFn& f);

}  // namespace cdp
