#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cdp/dp_det.hpp"
#include "cdp/dp_stoch.hpp"
#include "json.hpp"

namespace cdp {

/// Exact fraction num/den with den > 0, kept in lowest terms.
struct Rational {
  std::int64_t num = 0, den = 1;

  static Rational make(std::int64_t num, std::int64_t den);
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational&, const Rational&) = default;
};

/// Parses "p/q", an integer, or a finite decimal such as "0.25".
Rational parse_rational(const std::string& s);
std::string to_string(const Rational& r);

// LQR family.

/// Separable quadratics sum_i c_i x_i^2 for g_x, g_u, g_T (one coefficient
/// broadcasts to every axis), dynamics x' = x + u on [-R, R]^d. g_x defaults to
/// zero, which gives J_t(x) = x^2 / (T - t + 1) when g_u = u^2 and g_T = x^2.
struct LqrParams {
  std::size_t d = 1, T = 3;
  std::vector<double> cx{0.0}, cu{1.0}, cT{1.0};
  double R = 2.0;
  std::size_t N = 65;  // state points per axis
  std::size_t M = 65;  // action points per axis of the oracle action grid
};

DpModel make_lqr(const LqrParams& p);
/// Riccati coefficients: J_t(x) = sum_i P[t][i] x_i^2 for t = 0..T, valid
/// while the optimal action stays inside the box.
std::vector<std::vector<double>> lqr_value_coefficients(const LqrParams& p);
/// Gains: u*_t(x)_i = -K[t][i] x_i for t = 0..T-1.
std::vector<std::vector<double>> lqr_policy_gains(const LqrParams& p);

// Newsvendor hardness family.

struct HardInstanceParams {
  std::vector<std::int64_t> a;      // Z_i uniform on {0, a_i}
  Rational lambda = Rational::make(1, 2);
  std::optional<double> beta;       // default lambda_bar / (8 m^2 n^2)
  std::optional<double> Ux, Uu;     // defaults max(1/beta, m n) and 1/beta
  double terminal_multiplier = 10.0;  // g_T(x) = multiplier * m n x^2
  double state_spacing = 0.25;
  /// Halves the state spacing and the dual spacing this many times.
  unsigned refinement = 0;
  /// beta = 0: linear purchase costs, boxes default to [-2mn, 2mn] and [0, 2mn].
  bool linear = false;
  /// One extra purchase stage after the last demand, so every demand can be
  /// covered after it is observed (T = n + 3).
  bool recourse_after_demand = false;
};

struct HardInstance {
  StochModel model;
  std::size_t n = 0;
  std::int64_t m = 0;
  double beta = 0.0, lambda_bar = 0.0, Ux = 0.0, Uu = 0.0;
  double state_spacing = 0.0, dual_spacing = 0.0;
};

/// T = n + 2 stages: stage 0 buys at 1 - lambda, stages 1..T-2 buy at unit
/// cost and then see demand Z_t, stage T-1 disposes at quadratic cost only
/// (b = -1). Throws BadParams when the parameter invariants fail.
HardInstance make_hard_instance(const HardInstanceParams& p);
/// Per-stage fixed dual grids covering the slopes met along optimal paths:
/// [-1.5, 0.5] for purchase stages and [-4, 1] for the disposal stage, with
/// spacing beta / 8 (halved per refinement) so the recovered first-stage
/// action resolves 1/16.
std::vector<DualPolicy> hard_instance_duals(const HardInstance& h);
/// First-stage action at x_0 = 0 recovered from a solve of the instance.
double hard_first_action(const HardInstance& h, const StochSolveResult& r);

/// Counts of outcomes by total: counts[s] = #{masks : sum_{i in mask} a_i = s}.
/// Throws BudgetExceeded for n > 24 and BadParams for negative a_i.
std::vector<std::uint64_t> convolution_counts(std::span<const std::int64_t> a);
/// P(sum Z_i <= Lambda) exactly, by enumerating all 2^n outcomes.
Rational cdf_convolution_oracle(std::span<const std::int64_t> a, std::int64_t Lambda);
/// Smallest integer z >= 0 with P(sum Z_i <= z) >= lambda, lambda in (0, 1].
std::int64_t newsvendor_oracle(std::span<const std::int64_t> a, const Rational& lambda);

// Lower-bound family.

/// T = 1 on {0,1}^d: x' = e_k e_k^T x + B'u with B' = (e_i)_{i != k} and
/// u in {0,1}^{d-1}, zero running costs, J_1(x) = max_i |x_i - alpha_i|.
/// For d = 1 the action is the single point {0} with a zero column.
DpModel make_lower_bound_instance(std::size_t d, std::size_t k, const std::vector<int>& alpha);
/// |x_k - alpha_k|.
double lower_bound_value(std::size_t k, const std::vector<int>& alpha, std::span<const double> x);

// Piecewise-linear family.

/// Terminal cost g_T = the convex piecewise-linear function through (knots,
/// values), action cost rho |u| on [-R, R], dynamics x' = x + u, g_x = 0.
struct PwlParams {
  std::vector<double> knots{-1.0, 0.0, 1.0}, values{1.0, 0.0, 1.0};
  double rho = 1.0;
  double R = 2.0;
  std::size_t N = 65;
  std::size_t M = 65;
  std::size_t T = 2;
};

/// Throws NotConvex when the slopes decrease, BadParams on malformed knots.
DpModel make_pwl_instance(const PwlParams& p);

void to_json(nlohmann::json& j, const Rational& r);
void from_json(const nlohmann::json& j, Rational& r);
void to_json(nlohmann::json& j, const LqrParams& p);
void from_json(const nlohmann::json& j, LqrParams& p);
void to_json(nlohmann::json& j, const HardInstanceParams& p);
void from_json(const nlohmann::json& j, HardInstanceParams& p);
void to_json(nlohmann::json& j, const PwlParams& p);
void from_json(const nlohmann::json& j, PwlParams& p);

}  // namespace cdp
