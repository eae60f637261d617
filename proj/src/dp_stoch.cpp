#include "cdp/dp_stoch.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "cdp/errors.hpp"
#include "cdp/parallel.hpp"

namespace cdp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Kahan-compensated running sum.
struct CompensatedSum {
  double sum = 0.0, c = 0.0;
  void add(double v) {
    const double y = v - c;
    const double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

bool in_box(const RegularGrid& g, std::span<const double> y, double tol) {
  for (std::size_t a = 0; a < g.dim(); ++a)
    if (y[a] < g.lower()[a] - tol || y[a] > g.upper()[a] + tol) return false;
  return true;
}

Eigen::Map<const Eigen::VectorXd> as_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Per-stage action data shared by the oracles.
struct ActionTable {
  std::vector<double> gu;
  Eigen::MatrixXd Bu;  // column k = B' u_k
};

ActionTable tabulate_actions(const StageData& st, const RegularGrid& actions) {
  if (actions.size() == 0) throw NoActions("empty action grid");
  ActionTable t{std::vector<double>(actions.size()),
                Eigen::MatrixXd(st.Bp.rows(), static_cast<Eigen::Index>(actions.size()))};
  std::vector<double> u(actions.dim());
  for (std::size_t k = 0; k < actions.size(); ++k) {
    actions.point(k, u);
    t.gu[k] = evaluate(st.gu, u);
    t.Bu.col(static_cast<Eigen::Index>(k)) = st.Bp * as_vec(u);
  }
  return t;
}

struct PointMin {
  double value = kInf;
  std::size_t arg = 0;
  bool violated = false;
  double slack = 0.0;
};

// min over actions of g_u(u) + sum_k p_k J(base + B'u + shift_k); infeasible
// when some successor leaves the box beyond tol. Falls back to the action
// with the smallest total clamp distance.
PointMin minimize_actions(const DiscreteFn& J, const ActionTable& at, const Eigen::VectorXd& base,
                          const NoiseModel& noise, double tol, const BellmanOptions& opt) {
  const std::size_t d = static_cast<std::size_t>(base.size()), M = at.gu.size(), r = noise.size();
  std::vector<double> y(d);
  PointMin best;
  double fallback = kInf, least_excess = kInf;
  std::size_t fallback_k = 0;
  for (std::size_t k = 0; k < M; ++k) {
    CompensatedSum ev;
    double excess_total = 0.0, local_slack = 0.0;
    bool feasible = true;
    for (std::size_t q = 0; q < r; ++q) {
      for (std::size_t a = 0; a < d; ++a)
        y[a] = base(static_cast<Eigen::Index>(a)) + at.Bu(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(k)) +
               noise.support[q][a];
      double excess = 0.0;
      const double Jy = interpolate(J, y, excess);
      if (excess > tol) feasible = false;
      excess_total += excess;
      if (opt.reference) local_slack = std::max(local_slack, std::abs(Jy - opt.reference(y)));
      ev.add(noise.probs[q] * Jy);
    }
    const double v = at.gu[k] + ev.sum;
    if (!feasible) {
      if (excess_total < least_excess || (excess_total == least_excess && v < fallback)) {
        least_excess = excess_total;
        fallback = v;
        fallback_k = k;
      }
      continue;
    }
    best.slack = std::max(best.slack, local_slack);
    if (v < best.value) best.value = v, best.arg = k;
  }
  if (best.value == kInf) {
    best.value = fallback;
    best.arg = fallback_k;
    best.violated = true;
  }
  return best;
}

}  // namespace

void NoiseModel::validate(std::size_t dim) const {
  if (support.empty()) throw BadParams("noise needs at least one support point");
  if (probs.size() != support.size()) throw BadParams("noise support and probabilities differ in length");
  CompensatedSum total;
  for (std::size_t k = 0; k < support.size(); ++k) {
    if (support[k].size() != dim) throw BadParams("noise support vector has the wrong dimension");
    for (double v : support[k])
      if (!std::isfinite(v)) throw BadParams("noise support must be finite");
    if (!(probs[k] >= 0.0)) throw BadParams("noise probabilities must be nonnegative");
    total.add(probs[k]);
  }
  if (std::abs(total.sum - 1.0) > 1e-12) throw BadParams("noise probabilities must sum to 1");
}

double NoiseModel::max_norm() const {
  double m = 0.0;
  for (const auto& s : support) {
    double n2 = 0.0;
    for (double v : s) n2 += v * v;
    m = std::max(m, std::sqrt(n2));
  }
  return m;
}

NoiseModel NoiseModel::point_mass(std::size_t dim) { return NoiseModel{{std::vector<double>(dim, 0.0)}, {1.0}}; }

void StochModel::validate() const {
  model.validate();
  if (noise.size() != 1 && noise.size() != model.horizon())
    throw BadParams("need one noise model or one per stage");
  for (const auto& n : noise) n.validate(model.state_dim());
}

void to_json(nlohmann::json& j, const NoiseModel& n) { j = nlohmann::json{{"support", n.support}, {"probs", n.probs}}; }

void from_json(const nlohmann::json& j, NoiseModel& n) {
  n.support = j.at("support").get<std::vector<std::vector<double>>>();
  n.probs = j.at("probs").get<std::vector<double>>();
}

void to_json(nlohmann::json& j, const StochModel& m) {
  j = m.model;
  if (m.noise.size() == 1) j["noise"] = m.noise[0];
  else j["noise"] = m.noise;
}

void from_json(const nlohmann::json& j, StochModel& m) {
  StochModel out;
  out.model = j.get<DpModel>();
  const auto& nz = j.at("noise");
  if (nz.is_array()) out.noise = nz.get<std::vector<NoiseModel>>();
  else out.noise = {nz.get<NoiseModel>()};
  out.validate();
  m = std::move(out);
}

StochModel load_stoch_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file " + path);
  nlohmann::json j;
  in >> j;
  return j.get<StochModel>();
}

CostFn expected_cost(const std::vector<CostFn>& terms, std::span<const double> probs) {
  if (terms.empty() || terms.size() != probs.size()) throw BadParams("expected cost needs one probability per term");
  const auto* first = std::get_if<QuadraticCost>(&terms[0]);
  if (!first) throw BadParams("expected cost supports quadratic terms only");
  QuadraticCost out = *first;
  std::fill(out.a.begin(), out.a.end(), 0.0);
  std::fill(out.b.begin(), out.b.end(), 0.0);
  out.c = 0.0;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const auto* q = std::get_if<QuadraticCost>(&terms[k]);
    if (!q || q->a.size() != out.a.size() || q->lower != first->lower || q->upper != first->upper)
      throw BadParams("expected cost terms must be quadratics on one box");
    for (std::size_t i = 0; i < out.a.size(); ++i) {
      out.a[i] += probs[k] * q->a[i];
      out.b[i] += probs[k] * q->b[i];
    }
    out.c += probs[k] * q->c;
  }
  return out;
}

BellmanResult stoch_bellman_step(const DiscreteFn& J, const StochModel& m, std::size_t t, const RegularGrid& actions,
                                 const BellmanOptions& opt) {
  if (t >= m.model.horizon()) throw BadParams("stage index beyond the horizon");
  const StageData& st = m.model.stages[t];
  const NoiseModel& noise = m.noise_at(t);
  const RegularGrid& X = J.grid;
  if (actions.dim() != m.model.action_dim() || X.dim() != m.model.state_dim())
    throw BadParams("grid dimensions do not match the model");
  const ActionTable at = tabulate_actions(st, actions);
  const double tol = opt.clamp_tol * (1.0 + max_norm(X));
  std::vector<PointMin> res(X.size());
  parallel_for(X.size(), [&](std::size_t b, std::size_t e) {
    std::vector<double> x(X.dim());
    for (std::size_t i = b; i < e; ++i) {
      X.point(i, x);
      res[i] = minimize_actions(J, at, st.Ap * as_vec(x), noise, tol, opt);
      res[i].value += evaluate(st.gx, x);
    }
  }, 8);
  BellmanResult r{DiscreteFn(X, std::vector<double>(X.size())), std::vector<std::size_t>(X.size()), 0, 0.0};
  for (std::size_t i = 0; i < X.size(); ++i) {
    r.value.values[i] = res[i].value;
    r.argmin[i] = res[i].arg;
    r.violations += res[i].violated;
    r.slack = std::max(r.slack, res[i].slack);
  }
  if (!opt.reference) r.slack = interpolation_slack_estimate(J);
  return r;
}

BellmanResult post_decision_bellman_step(const DiscreteFn& V, const StochModel& m, std::size_t t,
                                         const RegularGrid& actions, const BellmanOptions& opt) {
  if (t == 0 || t >= m.model.horizon()) throw BadParams("post-decision steps use stages 1..T-1");
  const StageData& st = m.model.stages[t];
  const NoiseModel& noise = m.noise_at(t - 1);
  const RegularGrid& X = V.grid;
  if (actions.dim() != m.model.action_dim() || X.dim() != m.model.state_dim())
    throw BadParams("grid dimensions do not match the model");
  const ActionTable at = tabulate_actions(st, actions);
  const double tol = opt.clamp_tol * (1.0 + max_norm(X));
  const NoiseModel none = NoiseModel::point_mass(X.dim());
  std::vector<double> value(X.size()), slack(X.size(), 0.0);
  std::vector<std::size_t> arg(X.size()), bad(X.size(), 0);
  parallel_for(X.size(), [&](std::size_t b, std::size_t e) {
    std::vector<double> mp(X.dim()), y(X.dim());
    for (std::size_t i = b; i < e; ++i) {
      X.point(i, mp);
      CompensatedSum total;
      for (std::size_t q = 0; q < noise.size(); ++q) {
        for (std::size_t a = 0; a < y.size(); ++a) y[a] = mp[a] + noise.support[q][a];
        PointMin pm = minimize_actions(V, at, st.Ap * as_vec(y), none, tol, opt);
        total.add(noise.probs[q] * (evaluate(st.gx, y) + pm.value));
        bad[i] += pm.violated;
        slack[i] = std::max(slack[i], pm.slack);
        if (q == 0) arg[i] = pm.arg;
      }
      value[i] = total.sum;
    }
  }, 8);
  BellmanResult r{DiscreteFn(X, std::move(value)), std::move(arg), 0, 0.0};
  for (std::size_t v : bad) r.violations += v;
  r.slack = opt.reference ? *std::max_element(slack.begin(), slack.end()) : interpolation_slack_estimate(V);
  return r;
}

StochStep conj_stoch_step(const DiscreteFn& Vp, const StochModel& m, std::size_t t, const DualGrid& duals,
                          const TransformHooks* hooks) {
  const DpModel& dm = m.model;
  if (t == 0 || t >= dm.horizon()) throw BadParams("post-decision steps use stages 1..T-1");
  if (!(Vp.grid == dm.state_grid())) throw BadParams("value function is not on the model's state grid");
  if (duals.grid.dim() != Vp.grid.dim()) throw BadParams("dual grid dimension does not match the state");
  const double noise_tol = 64.0 * std::numeric_limits<double>::epsilon() * Vp.max_abs();
  if (!is_axis_convex(Vp, noise_tol)) throw NotConvex("value function is not convex along every axis");
  const StageData& st = dm.stages[t];
  if (std::holds_alternative<FunctionCost>(st.gu)) throw NoConjugate("action cost has no conjugate");
  const NoiseModel& noise = m.noise_at(t - 1);

  const auto vstar = forward_transform(Vp, duals, hooks);
  DiscreteFn h = slope_function(vstar.values, st, dm.first_integer_action(), duals);

  const RegularGrid& X = Vp.grid;
  const std::size_t N = X.size(), r = noise.size();
  StochStep out{DiscreteFn(X, std::vector<double>(N)), std::vector<std::size_t>(N * r), std::move(h), 0};
  std::vector<CompensatedSum> acc(N);
  const double box_tol = 1e-9 * (1.0 + max_norm(X));
  for (std::size_t q = 0; q < r; ++q) {
    const auto& xi = noise.support[q];
    auto back = back_transform(out.h, st.Ap, X, xi, hooks);
    parallel_for(N, [&](std::size_t b, std::size_t e) {
      std::vector<double> y(X.dim());
      for (std::size_t i = b; i < e; ++i) {
        X.point(i, y);
        for (std::size_t a = 0; a < y.size(); ++a) y[a] += xi[a];
        acc[i].add(noise.probs[q] * (back.values[i] + evaluate(st.gx, y)));
      }
    }, 64);
    for (std::size_t i = 0; i < N; ++i) {
      out.s_star[q * N + i] = back.argmax[i];
      const auto p = X.point(i);
      std::vector<double> y(p.size());
      for (std::size_t a = 0; a < y.size(); ++a) y[a] = p[a] + xi[a];
      out.out_of_box += !in_box(X, y, box_tol);
    }
  }
  for (std::size_t i = 0; i < N; ++i) out.value.values[i] = acc[i].sum;
  return out;
}

ErrorBounds stoch_error_bounds(const StochModel& m, std::size_t t, const DualGrid& duals, double L_J) {
  ErrorBounds b = error_bounds(m.model, t, duals, L_J);
  if (t == 0) return b;
  const double widen = m.noise_at(t - 1).max_norm();
  if (b.E2 > 0.0) b.E2 *= (b.tau + widen + b.eta) / (b.tau + b.eta);
  b.tau += widen;
  return b;
}

DiscreteFn expected_terminal(const StochModel& m) {
  const DpModel& dm = m.model;
  const RegularGrid X = dm.state_grid();
  const NoiseModel& noise = m.noise_at(dm.horizon() - 1);
  std::vector<double> v(X.size());
  parallel_for(X.size(), [&](std::size_t b, std::size_t e) {
    std::vector<double> y(X.dim());
    for (std::size_t i = b; i < e; ++i) {
      CompensatedSum s;
      for (std::size_t q = 0; q < noise.size(); ++q) {
        X.point(i, y);
        for (std::size_t a = 0; a < y.size(); ++a) y[a] += noise.support[q][a];
        s.add(noise.probs[q] * evaluate(dm.gT, y));
      }
      v[i] = s.sum;
    }
  }, 64);
  return DiscreteFn(X, std::move(v));
}

double StochSolveResult::cumulative_bound(std::size_t from_post) const {
  double s = 0.0;
  for (std::size_t t = from_post; t < post.size(); ++t) s += post[t].bounds.sum();
  return s;
}

double StochSolveResult::total_bound() const { return first.bounds.sum() + cumulative_bound(0); }

StochSolveResult stoch_solve(const StochModel& m, const std::vector<DualPolicy>& policies,
                             const TransformHooks* hooks) {
  m.validate();
  const DpModel& dm = m.model;
  const std::size_t T = dm.horizon();
  if (policies.size() != 1 && policies.size() != T) throw BadParams("need one dual policy or one per stage");
  auto policy = [&](std::size_t s) -> const DualPolicy& { return policies.size() == 1 ? policies[0] : policies[s]; };

  StochSolveResult r;
  r.post.resize(T);
  r.post[T - 1].stage = T - 1;
  r.post[T - 1].value = expected_terminal(m);
  for (std::size_t t = T - 1; t-- > 0;) {
    const DiscreteFn& Vn = r.post[t + 1].value;
    DualGrid duals = make_duals(Vn, policy(t + 1));
    const double LJ = discrete_lipschitz(Vn);
    StochStep step = conj_stoch_step(Vn, m, t + 1, duals, hooks);
    StageReport& rep = r.post[t];
    rep.stage = t;
    rep.bounds = stoch_error_bounds(m, t + 1, duals, LJ);
    rep.lipschitz_in = LJ;
    try {
      rep.curvature = estimate_curvature(step.value);
    } catch (const TooFewPoints&) {
      rep.curvature.reset();
    }
    r.out_of_box += step.out_of_box;
    rep.duals = std::move(duals);
    rep.s_star = std::move(step.s_star);
    rep.value = std::move(step.value);
  }
  const DiscreteFn& V0 = r.post[0].value;
  DualGrid duals = make_duals(V0, policy(0));
  const double LJ = discrete_lipschitz(V0);
  ConjStep step = conjugate_dp_step(V0, dm, 0, duals, hooks);
  r.first.stage = 0;
  r.first.bounds = error_bounds(dm, 0, duals, LJ);
  r.first.lipschitz_in = LJ;
  try {
    r.first.curvature = estimate_curvature(step.value);
  } catch (const TooFewPoints&) {
    r.first.curvature.reset();
  }
  r.first.duals = std::move(duals);
  r.first.s_star = std::move(step.s_star);
  r.first.value = std::move(step.value);
  return r;
}

PolicyResult extract_policy_stoch(std::span<const double> s_star, const StochModel& m, std::size_t t, double eps) {
  return extract_policy(s_star, m.model, t, eps);
}

}  // namespace cdp
