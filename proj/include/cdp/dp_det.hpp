#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cdp/conditioning.hpp"
#include "cdp/cost.hpp"
#include "cdp/grid.hpp"
#include "cdp/lft.hpp"
#include "json.hpp"

namespace cdp {

/// Dynamics x' = A'x + B'u and the separable stage cost g_x(x) + g_u(u).
struct StageData {
  Eigen::MatrixXd Ap, Bp;
  CostFn gx, gu;
};

/// Finite-horizon model. The state vector is (y, z) with the continuous block
/// first, the action vector (v, w) likewise; stages[t] holds the data applied
/// at stage t = 0..T-1.
struct DpModel {
  MixedSpace state, action;
  std::vector<StageData> stages;
  CostFn gT;

  std::size_t horizon() const { return stages.size(); }
  std::size_t state_dim() const { return state.dim(); }
  std::size_t action_dim() const { return action.dim(); }
  std::size_t first_integer_action() const { return action.continuous_dim(); }
  RegularGrid state_grid() const { return state.product(); }
  RegularGrid action_grid() const { return action.product(); }

  /// Throws BadParams on inconsistent dimensions or non-integral integer-block
  /// dynamics.
  void validate() const;
};

/// A' = [[A, 0], [0, D]].
Eigen::MatrixXd block_state_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& D);
/// B' = [[B, C], [0, E]].
Eigen::MatrixXd block_action_matrix(const Eigen::MatrixXd& B, const Eigen::MatrixXd& C, const Eigen::MatrixXd& E);

/// Same data at every stage.
DpModel stationary_model(MixedSpace state, MixedSpace action, Eigen::MatrixXd Ap, Eigen::MatrixXd Bp, CostFn gx,
                         CostFn gu, CostFn gT, std::size_t T);

void from_json(const nlohmann::json& j, DpModel& m);
void to_json(nlohmann::json& j, const DpModel& m);
DpModel load_model(const std::string& path);

// Brute-force Bellman oracle.

struct BellmanOptions {
  /// When set, interpolation slack is measured against this function at every
  /// queried successor state; otherwise it is estimated from second
  /// differences.
  std::function<double(std::span<const double>)> reference;
  /// Clamp distances above clamp_tol * (1 + max_norm(state box)) count as
  /// feasibility violations.
  double clamp_tol = 1e-9;
};

struct BellmanResult {
  DiscreteFn value;
  std::vector<std::size_t> argmin;  // flat action-grid index per state
  std::size_t violations = 0;
  double slack = 0.0;
};

/// g_x(x) + min_u g_u(u) + J(A'x + B'u) over the action grid, J interpolated
/// multilinearly. Throws NoActions on an empty action grid.
BellmanResult bellman_step(const DiscreteFn& J, const DpModel& m, std::size_t t, const RegularGrid& actions,
                           const BellmanOptions& opt = {});

/// sum over axes of max |second difference| / 8: the multilinear interpolation
/// error of a function whose sampled curvature is bounded by the grid's.
double interpolation_slack_estimate(const DiscreteFn& J);

// Conjugate DP operator.

/// Hooks that replace the default slice solver in the transform passes.
/// begin_transform(kind, input) runs ahead of every transform with kind
/// "forward" (value function to slopes) or "back" (h to states).
struct TransformHooks {
  SliceSolver solver;
  std::function<void(std::size_t, std::size_t)> before_pass;
  std::function<void(const char*, const DiscreteFn&)> begin_transform;
};

/// f* on the dual grid through the hooks when given, else the fast kernel.
ConjugateTable forward_transform(const DiscreteFn& f, const DualGrid& duals, const TransformHooks* hooks = nullptr);

/// h(s) = g_u*(-B'^T s) + jstar(s) on the dual grid.
DiscreteFn slope_function(std::span<const double> jstar, const StageData& st, std::size_t first_integer,
                          const DualGrid& duals);

/// h*(A'(x + shift)) for every point x of `base`, in base enumeration order;
/// argmax holds flat dual indices. Diagonal A' uses the product transform
/// (hooks apply); any other A' falls back to point queries.
ConjugateTable back_transform(const DiscreteFn& h, const Eigen::MatrixXd& Ap, const RegularGrid& base,
                              std::span<const double> shift, const TransformHooks* hooks = nullptr);

struct ConjStep {
  DiscreteFn value;
  std::vector<std::size_t> s_star;  // flat dual index of the step-3 optimizer per state
  DiscreteFn h;
};

/// Throws NotConvex unless Jp passes is_axis_convex, NoConjugate when g_u has
/// no conjugate. With hooks both transforms run through them.
ConjStep conjugate_dp_step(const DiscreteFn& Jp, const DpModel& m, std::size_t t, const DualGrid& duals,
                           const TransformHooks* hooks = nullptr);

struct ErrorBounds {
  double E1 = 0.0, E2 = 0.0;
  double tau = 0.0, eta = 0.0;
  double sum() const { return E1 + E2; }
};

/// E1 = (1+sqrt d) L_J d_H(continuous state block); E2 = (1+sqrt d)(tau+eta)
/// d_H(dual grid) with tau the largest state norm and eta = ||B'||_2 times the
/// largest action the conjugate of g_u selects over the dual box.
ErrorBounds error_bounds(const DpModel& m, std::size_t t, const DualGrid& duals, double L_J);

/// sqrt(sum_a L_a^2) with L_a the largest |discrete gradient| along axis a.
double discrete_lipschitz(const DiscreteFn& f);

struct DualPolicy {
  enum class Kind { Canonical, Bounding, Fixed };
  Kind kind = Kind::Bounding;
  std::vector<std::size_t> points;  // K (Canonical) or K per axis (Bounding)
  std::optional<RegularGrid> grid;  // Fixed

  static DualPolicy canonical(std::size_t K) { return {Kind::Canonical, {K}, std::nullopt}; }
  static DualPolicy bounding(std::vector<std::size_t> K) { return {Kind::Bounding, std::move(K), std::nullopt}; }
  static DualPolicy fixed(RegularGrid g) { return {Kind::Fixed, {}, std::move(g)}; }
};

DualGrid make_duals(const DiscreteFn& f, const DualPolicy& p);

struct StageReport {
  std::size_t stage = 0;
  DiscreteFn value;  // J_t
  ErrorBounds bounds;
  double lipschitz_in = 0.0;  // L of J_{t+1}
  std::optional<CurvatureReport> curvature;  // of J_t, when estimable
  DualGrid duals;
  std::vector<std::size_t> s_star;
};

struct SolveResult {
  DiscreteFn terminal;               // J_T
  std::vector<StageReport> stages;   // indexed by t
  /// sum over stages t..T-1 of E1 + E2.
  double cumulative_bound(std::size_t from_stage = 0) const;
};

/// Stage policies: either one entry for all stages or one per stage.
SolveResult solve(const DpModel& m, const std::vector<DualPolicy>& policies, const TransformHooks* hooks = nullptr);

/// J_T sampled on the state grid.
DiscreteFn terminal_values(const DpModel& m);

struct PolicyResult {
  std::vector<double> u;
  /// sqrt(4 eps / mu_gu); absent (with a warning) when mu_gu = 0.
  std::optional<double> bound;
};

/// argmin_u g_u(u) + <u, B'^T s*> for stage t.
PolicyResult extract_policy(std::span<const double> s_star, const DpModel& m, std::size_t t, double eps);

struct BellmanSolve {
  std::vector<DiscreteFn> values;  // index t = 0..T
  std::size_t violations = 0;
  std::vector<double> slack;       // per stage t = 0..T-1
};

/// T-fold Bellman oracle on the model's action grid.
BellmanSolve bellman_solve(const DpModel& m, const RegularGrid& actions, const BellmanOptions& opt = {});

/// Points per axis for a target accuracy: the next power of two >= T / eps
/// for both the continuous state axes and the dual axes.
struct GridSizes {
  std::size_t state_points = 0;
  std::size_t dual_points = 0;
};
GridSizes epsilon_grid_sizes(double eps, std::size_t T);

/// CSV columns: stage,E1,E2,bound,cumulative_bound,lipschitz,measured
/// (measured is empty when not supplied).
void write_stage_csv(std::ostream& os, const SolveResult& r, const std::vector<std::optional<double>>& measured = {});

}  // namespace cdp
