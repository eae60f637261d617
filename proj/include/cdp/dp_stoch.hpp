#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cdp/dp_det.hpp"

namespace cdp {

/// Finite-support noise: xi_k with probability probs[k].
struct NoiseModel {
  std::vector<std::vector<double>> support;
  std::vector<double> probs;

  std::size_t size() const { return support.size(); }
  /// Throws BadParams unless r >= 1, probs >= 0 sum to 1 within 1e-12 and
  /// every support vector has dimension dim.
  void validate(std::size_t dim) const;
  double max_norm() const;

  static NoiseModel point_mass(std::size_t dim);
};

/// Model plus the noise added after each stage: x_{t+1} = A'x_t + B'u_t + xi_t
/// with xi_t ~ noise[t] (one entry means stationary noise).
struct StochModel {
  DpModel model;
  std::vector<NoiseModel> noise;

  const NoiseModel& noise_at(std::size_t t) const { return noise.size() == 1 ? noise[0] : noise.at(t); }
  void validate() const;
};

void to_json(nlohmann::json& j, const NoiseModel& n);
void from_json(const nlohmann::json& j, NoiseModel& n);
/// Model JSON plus "noise": one {support, probs} object or an array of T.
void to_json(nlohmann::json& j, const StochModel& m);
void from_json(const nlohmann::json& j, StochModel& m);
StochModel load_stoch_model(const std::string& path);

/// p-weighted average of quadratic descriptors sharing one box: the
/// expectation of a noise-dependent action cost. Throws BadParams otherwise.
CostFn expected_cost(const std::vector<CostFn>& terms, std::span<const double> probs);

// Brute-force oracles.

/// g_x(x) + min_u { g_u(u) + sum_k p_k J(A'x + B'u + xi_k) } over the action
/// grid for stage t; J is J_{t+1} on the state grid and xi ~ noise_at(t).
BellmanResult stoch_bellman_step(const DiscreteFn& J, const StochModel& m, std::size_t t, const RegularGrid& actions,
                                 const BellmanOptions& opt = {});

/// Post-decision recursion: for every grid point m,
///   sum_k p_k [ g_x(y_k) + min_u g_u(u) + V(A'y_k + B'u) ],  y_k = m + xi_k,
/// with stage-t data and xi ~ noise_at(t-1). V is the post-decision value
/// after stage t. Violations count (m, k) pairs with no feasible action.
BellmanResult post_decision_bellman_step(const DiscreteFn& V, const StochModel& m, std::size_t t,
                                         const RegularGrid& actions, const BellmanOptions& opt = {});

// Conjugate operator.

struct StochStep {
  DiscreteFn value;
  /// s_star[k * N + i]: flat dual index of the optimizer for point i, noise k.
  std::vector<std::size_t> s_star;
  DiscreteFn h;
  /// (point, k) pairs whose query m + xi_k leaves the state box by more than
  /// 1e-9 (1 + max_norm(box)).
  std::size_t out_of_box = 0;
};

/// V(m) = sum_k p_k [ g_x(m + xi_k) + h*(A'(m + xi_k)) ] with h built once
/// from Vp and stage-t data, xi ~ noise_at(t-1), summed with compensation.
/// Throws as conjugate_dp_step.
StochStep conj_stoch_step(const DiscreteFn& Vp, const StochModel& m, std::size_t t, const DualGrid& duals,
                          const TransformHooks* hooks = nullptr);

/// error_bounds with tau widened by the largest noise norm.
ErrorBounds stoch_error_bounds(const StochModel& m, std::size_t t, const DualGrid& duals, double L_J);

struct StochSolveResult {
  /// post[t] = V_t, the expected cost-to-go after the stage-t decision,
  /// t = 0..T-1; post[T-1] is the exact expectation of g_T (zero bounds).
  std::vector<StageReport> post;
  StageReport first;  // J_0 on the state grid
  std::size_t out_of_box = 0;
  /// Sum of E1 + E2 over post[from_post..T-1]: the bound on V_{from_post}.
  double cumulative_bound(std::size_t from_post = 0) const;
  double total_bound() const;
};

/// One dual policy for all steps or one per stage (the policy of stage s is
/// used by the step that applies stage-s data).
StochSolveResult stoch_solve(const StochModel& m, const std::vector<DualPolicy>& policies,
                             const TransformHooks* hooks = nullptr);

/// Action for stage t at a state whose step-3 optimizer is s_star.
PolicyResult extract_policy_stoch(std::span<const double> s_star, const StochModel& m, std::size_t t, double eps);

/// V_{T-1}(m) = sum_k p_k g_T(m + xi_k), xi ~ noise_at(T-1), sampled on the
/// state grid with compensated summation.
DiscreteFn expected_terminal(const StochModel& m);

}  // namespace cdp
