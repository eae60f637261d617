#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "cdp/lft.hpp"
#include "json.hpp"

namespace cdp {

/// sum_i a_i u_i^2 / 2 + b_i u_i + c over the box [lower, upper] (bounds may be
/// infinite). A term beta u^2 is a_i = 2 beta.
struct QuadraticCost {
  std::vector<double> a, b;
  double c = 0.0;
  std::vector<double> lower, upper;

  static QuadraticCost isotropic(std::size_t dim, double a, double b = 0.0, double c = 0.0);
};

/// Separable sum of univariate piecewise-linear functions, one knot list per
/// coordinate, linearly extrapolated outside the knots. The box defaults to
/// the knot range.
struct PiecewiseLinearCost {
  std::vector<std::vector<double>> knots, values;
  std::vector<double> lower, upper;
};

/// Grid samples, evaluated by multilinear interpolation (clamped to the grid).
struct TabulatedCost {
  DiscreteFn fn;
};

/// Arbitrary value-only function; usable by the Bellman oracle but has no
/// conjugate.
struct FunctionCost {
  std::size_t dim = 0;
  std::function<double(std::span<const double>)> f;
};

using CostFn = std::variant<QuadraticCost, PiecewiseLinearCost, TabulatedCost, FunctionCost>;

std::size_t cost_dim(const CostFn& g);
double evaluate(const CostFn& g, std::span<const double> u);

struct CostConjugate {
  double value = 0.0;
  std::vector<double> argmax;
};

/// sup over the cost's box of <s,u> - g(u). Coordinates with index >=
/// first_integer are restricted to integers. Throws NoConjugate for
/// FunctionCost, Unbounded when the supremum is infinite.
CostConjugate cost_conjugate(const CostFn& g, std::span<const double> s, std::size_t first_integer);

/// Smallest strong-convexity modulus the descriptor guarantees (min a_i for
/// quadratics, 0 otherwise).
double strong_convexity(const CostFn& g);

/// Upper bound on max |argmax_i| over slopes whose i-th coordinate ranges in
/// [slo_i, shi_i]; the Lipschitz constant of the conjugate on that box.
std::vector<double> conjugate_argmax_bound(const CostFn& g, std::span<const double> slo,
                                           std::span<const double> shi, std::size_t first_integer);

/// Samples g at every grid point.
DiscreteFn tabulate(const CostFn& g, const RegularGrid& grid);

/// Multilinear interpolation of f at x. Coordinates outside the grid box are
/// clamped; the Euclidean clamp distance is returned through excess.
double interpolate(const DiscreteFn& f, std::span<const double> x, double& excess);

void to_json(nlohmann::json& j, const CostFn& g);
void from_json(const nlohmann::json& j, CostFn& g);

}  // namespace cdp
