#include "cdp/dp_det.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>

#include "cdp/errors.hpp"
#include "cdp/parallel.hpp"

namespace cdp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_integral(double v) { return std::isfinite(v) && v == std::floor(v); }

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols, const char* name) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(rows, cols);
  if (rows == 0 || cols == 0) return M;
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
    throw BadParams(std::string("model json: matrix ") + name + " has the wrong number of rows");
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw BadParams(std::string("model json: matrix ") + name + " has the wrong number of columns");
    for (Eigen::Index c = 0; c < cols; ++c) M(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return M;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& M) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    j.push_back(row);
  }
  return j;
}

bool is_diagonal(const Eigen::MatrixXd& M) {
  for (Eigen::Index r = 0; r < M.rows(); ++r)
    for (Eigen::Index c = 0; c < M.cols(); ++c)
      if (r != c && M(r, c) != 0.0) return false;
  return true;
}

double operator_norm(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  return svd.singularValues()(0);
}

std::vector<std::vector<double>> axes_of(const RegularGrid& g) {
  std::vector<std::vector<double>> q(g.dim());
  for (std::size_t a = 0; a < g.dim(); ++a) q[a] = g.axis_coords(a);
  return q;
}

}  // namespace

ConjugateTable forward_transform(const DiscreteFn& f, const DualGrid& duals, const TransformHooks* hooks) {
  if (!hooks) return conjugate_product_fast(f.grid, f.values, axes_of(duals.grid));
  if (hooks->begin_transform) hooks->begin_transform("forward", f);
  return conjugate_product_with(f.grid, f.values, axes_of(duals.grid), hooks->solver, hooks->before_pass);
}

Eigen::MatrixXd block_state_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& D) {
  const Eigen::Index dr = A.rows(), di = D.rows();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dr + di, dr + di);
  if (dr) M.topLeftCorner(dr, dr) = A;
  if (di) M.bottomRightCorner(di, di) = D;
  return M;
}

Eigen::MatrixXd block_action_matrix(const Eigen::MatrixXd& B, const Eigen::MatrixXd& C, const Eigen::MatrixXd& E) {
  const Eigen::Index dr = std::max(B.rows(), C.rows()), di = E.rows();
  const Eigen::Index cr = B.cols(), ci = std::max(C.cols(), E.cols());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dr + di, cr + ci);
  if (B.size()) M.topLeftCorner(B.rows(), cr) = B;
  if (C.size()) M.block(0, cr, C.rows(), C.cols()) = C;
  if (E.size()) M.block(dr, cr, E.rows(), E.cols()) = E;
  return M;
}

void DpModel::validate() const {
  const auto d = static_cast<Eigen::Index>(state_dim()), c = static_cast<Eigen::Index>(action_dim());
  const auto dr = static_cast<Eigen::Index>(state.continuous_dim());
  const auto cr = static_cast<Eigen::Index>(action.continuous_dim());
  if (stages.empty()) throw BadParams("model needs a horizon of at least one stage");
  if (cost_dim(gT) != state_dim()) throw BadParams("terminal cost dimension does not match the state");
  for (std::size_t t = 0; t < stages.size(); ++t) {
    const auto& s = stages[t];
    if (s.Ap.rows() != d || s.Ap.cols() != d) throw BadParams("A' has the wrong shape at stage " + std::to_string(t));
    if (s.Bp.rows() != d || s.Bp.cols() != c) throw BadParams("B' has the wrong shape at stage " + std::to_string(t));
    if (cost_dim(s.gx) != state_dim()) throw BadParams("g_x dimension does not match the state");
    if (cost_dim(s.gu) != action_dim()) throw BadParams("g_u dimension does not match the action");
    for (Eigen::Index r = dr; r < d; ++r) {
      for (Eigen::Index k = 0; k < d; ++k) {
        const double v = s.Ap(r, k);
        if (k < dr ? v != 0.0 : !is_integral(v)) throw BadParams("integer state rows of A' must be [0 D] with integral D");
        if (k < dr && s.Ap(k, r) != 0.0) throw BadParams("A' must be block diagonal");
      }
      for (Eigen::Index k = 0; k < c; ++k) {
        const double v = s.Bp(r, k);
        if (k < cr ? v != 0.0 : !is_integral(v)) throw BadParams("integer state rows of B' must be [0 E] with integral E");
      }
    }
  }
}

DpModel stationary_model(MixedSpace state, MixedSpace action, Eigen::MatrixXd Ap, Eigen::MatrixXd Bp, CostFn gx,
                         CostFn gu, CostFn gT, std::size_t T) {
  DpModel m;
  m.state = std::move(state);
  m.action = std::move(action);
  m.stages.assign(T, StageData{std::move(Ap), std::move(Bp), std::move(gx), std::move(gu)});
  m.gT = std::move(gT);
  m.validate();
  return m;
}

void from_json(const nlohmann::json& j, DpModel& m) {
  DpModel out;
  out.state = j.at("state").get<MixedSpace>();
  out.action = j.at("action").get<MixedSpace>();
  const std::size_t T = j.at("horizon").get<std::size_t>();
  const auto dr = static_cast<Eigen::Index>(out.state.continuous_dim());
  const auto di = static_cast<Eigen::Index>(out.state.integer_dim());
  const auto cr = static_cast<Eigen::Index>(out.action.continuous_dim());
  const auto ci = static_cast<Eigen::Index>(out.action.integer_dim());

  auto read_dynamics = [&](const nlohmann::json& src, StageData& st) {
    if (src.contains("Ap")) st.Ap = matrix_from_json(src.at("Ap"), dr + di, dr + di, "Ap");
    else if (src.contains("A") || src.contains("D"))
      st.Ap = block_state_matrix(matrix_from_json(src.value("A", nlohmann::json()), dr, dr, "A"),
                                 matrix_from_json(src.value("D", nlohmann::json()), di, di, "D"));
    if (src.contains("Bp")) st.Bp = matrix_from_json(src.at("Bp"), dr + di, cr + ci, "Bp");
    else if (src.contains("B") || src.contains("C") || src.contains("E"))
      st.Bp = block_action_matrix(matrix_from_json(src.value("B", nlohmann::json()), dr, cr, "B"),
                                  matrix_from_json(src.value("C", nlohmann::json()), dr, ci, "C"),
                                  matrix_from_json(src.value("E", nlohmann::json()), di, ci, "E"));
    if (src.contains("gx")) st.gx = src.at("gx").get<CostFn>();
    if (src.contains("gu")) st.gu = src.at("gu").get<CostFn>();
  };

  StageData base;
  base.Ap = Eigen::MatrixXd::Identity(dr + di, dr + di);
  base.Bp = Eigen::MatrixXd::Zero(dr + di, cr + ci);
  read_dynamics(j, base);
  if (!j.contains("gx") || !j.contains("gu")) {
    // Stage costs may come solely from per-stage overrides.
    if (!j.contains("stages")) throw BadParams("model json needs gx and gu");
  }
  out.stages.assign(T, base);
  if (j.contains("stages")) {
    for (const auto& s : j.at("stages")) {
      const std::size_t t = s.at("t").get<std::size_t>();
      if (t >= T) throw BadParams("stage override index beyond the horizon");
      read_dynamics(s, out.stages[t]);
    }
  }
  out.gT = j.at("gT").get<CostFn>();
  out.validate();
  m = std::move(out);
}

void to_json(nlohmann::json& j, const DpModel& m) {
  j = nlohmann::json{{"horizon", m.horizon()}, {"state", m.state}, {"action", m.action}, {"gT", m.gT}};
  nlohmann::json stages = nlohmann::json::array();
  for (std::size_t t = 0; t < m.stages.size(); ++t) {
    const auto& s = m.stages[t];
    stages.push_back({{"t", t}, {"Ap", matrix_to_json(s.Ap)}, {"Bp", matrix_to_json(s.Bp)}, {"gx", s.gx}, {"gu", s.gu}});
  }
  j["stages"] = stages;
}

DpModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file " + path);
  nlohmann::json j;
  in >> j;
  return j.get<DpModel>();
}

// ---------------------------------------------------------------------------
// Bellman oracle

double interpolation_slack_estimate(const DiscreteFn& J) {
  const RegularGrid& g = J.grid;
  double total = 0.0;
  for (std::size_t a = 0; a < g.dim(); ++a) {
    const std::size_t n = g.points(a), stride = g.stride(a);
    if (n < 3) continue;
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const std::size_t k = (i / stride) % n;
      if (k == 0 || k + 1 == n) continue;
      worst = std::max(worst, std::abs(J[i + stride] - 2.0 * J[i] + J[i - stride]));
    }
    total += worst / 8.0;
  }
  return total;
}

BellmanResult bellman_step(const DiscreteFn& J, const DpModel& m, std::size_t t, const RegularGrid& actions,
                           const BellmanOptions& opt) {
  if (actions.size() == 0) throw NoActions("empty action grid");
  if (t >= m.horizon()) throw BadParams("stage index beyond the horizon");
  const StageData& st = m.stages[t];
  const RegularGrid& X = J.grid;
  const std::size_t d = X.dim(), c = actions.dim(), N = X.size(), M = actions.size();
  if (c != m.action_dim() || d != m.state_dim()) throw BadParams("grid dimensions do not match the model");
  const double tol = opt.clamp_tol * (1.0 + max_norm(X));

  std::vector<double> gu(M);
  Eigen::MatrixXd Bu(d, M);
  {
    std::vector<double> u(c);
    for (std::size_t k = 0; k < M; ++k) {
      actions.point(k, u);
      gu[k] = evaluate(st.gu, u);
      Bu.col(static_cast<Eigen::Index>(k)) = st.Bp * Eigen::Map<const Eigen::VectorXd>(u.data(), static_cast<Eigen::Index>(c));
    }
  }

  std::vector<double> value(N), slack(N, 0.0);
  std::vector<std::size_t> arg(N);
  std::vector<unsigned char> violated(N, 0);
  parallel_for(N, [&](std::size_t b, std::size_t e) {
    std::vector<double> x(d), y(d);
    for (std::size_t i = b; i < e; ++i) {
      X.point(i, x);
      const Eigen::VectorXd Ax = st.Ap * Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(d));
      double best = kInf, fallback = kInf, least_excess = kInf, worst_slack = 0.0;
      std::size_t best_k = 0, fallback_k = 0;
      for (std::size_t k = 0; k < M; ++k) {
        for (std::size_t a = 0; a < d; ++a) y[a] = Ax(static_cast<Eigen::Index>(a)) + Bu(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(k));
        double excess = 0.0;
        const double Jy = interpolate(J, y, excess);
        const double v = gu[k] + Jy;
        if (excess > tol) {
          if (excess < least_excess || (excess == least_excess && v < fallback)) {
            least_excess = excess;
            fallback = v;
            fallback_k = k;
          }
          continue;
        }
        if (opt.reference) worst_slack = std::max(worst_slack, std::abs(Jy - opt.reference(y)));
        if (v < best) best = v, best_k = k;
      }
      if (best == kInf) {
        best = fallback;
        best_k = fallback_k;
        violated[i] = 1;
      }
      value[i] = evaluate(st.gx, x) + best;
      arg[i] = best_k;
      slack[i] = worst_slack;
    }
  }, 8);

  BellmanResult r{DiscreteFn(X, std::move(value)), std::move(arg), 0, 0.0};
  for (unsigned char v : violated) r.violations += v;
  r.slack = opt.reference ? *std::max_element(slack.begin(), slack.end()) : interpolation_slack_estimate(J);
  return r;
}

BellmanSolve bellman_solve(const DpModel& m, const RegularGrid& actions, const BellmanOptions& opt) {
  BellmanSolve out;
  const std::size_t T = m.horizon();
  out.values.resize(T + 1);
  out.slack.resize(T);
  out.values[T] = terminal_values(m);
  for (std::size_t t = T; t-- > 0;) {
    auto r = bellman_step(out.values[t + 1], m, t, actions, opt);
    out.violations += r.violations;
    out.slack[t] = r.slack;
    out.values[t] = std::move(r.value);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Conjugate DP operator

DiscreteFn slope_function(std::span<const double> jstar, const StageData& st, std::size_t first_integer,
                          const DualGrid& duals) {
  const RegularGrid& S = duals.grid;
  if (jstar.size() != S.size()) throw BadParams("conjugate table does not match the dual grid");
  const std::size_t d = S.dim();
  if (static_cast<std::size_t>(st.Bp.rows()) != d) throw BadParams("B' rows do not match the dual dimension");
  std::vector<double> h(S.size());
  const Eigen::MatrixXd BpT = st.Bp.transpose();
  parallel_for(S.size(), [&](std::size_t b, std::size_t e) {
    std::vector<double> s(d), sigma(static_cast<std::size_t>(BpT.rows()));
    for (std::size_t j = b; j < e; ++j) {
      S.point(j, s);
      const Eigen::VectorXd v = -(BpT * Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(d)));
      for (std::size_t i = 0; i < sigma.size(); ++i) sigma[i] = v(static_cast<Eigen::Index>(i));
      h[j] = cost_conjugate(st.gu, sigma, first_integer).value + jstar[j];
    }
  }, 64);
  return DiscreteFn(S, std::move(h));
}

ConjugateTable back_transform(const DiscreteFn& h, const Eigen::MatrixXd& Ap, const RegularGrid& base,
                              std::span<const double> shift, const TransformHooks* hooks) {
  const std::size_t d = base.dim();
  if (h.grid.dim() != d || static_cast<std::size_t>(Ap.rows()) != d || shift.size() != d)
    throw BadParams("back transform dimensions do not match");
  if (is_diagonal(Ap)) {
    std::vector<std::vector<double>> q(d);
    std::vector<bool> reversed(d, false);
    for (std::size_t a = 0; a < d; ++a) {
      const double k = Ap(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a));
      q[a].resize(base.points(a));
      for (std::size_t i = 0; i < base.points(a); ++i) q[a][i] = k * (base.coord(a, i) + shift[a]);
      if (k < 0.0) {
        std::reverse(q[a].begin(), q[a].end());
        reversed[a] = true;
      }
    }
    if (hooks && hooks->begin_transform) hooks->begin_transform("back", h);
    ConjugateTable t = hooks ? conjugate_product_with(h.grid, h.values, q, hooks->solver, hooks->before_pass)
                             : conjugate_product_fast(h.grid, h.values, q);
    if (std::none_of(reversed.begin(), reversed.end(), [](bool r) { return r; })) return t;
    ConjugateTable out{std::vector<double>(t.values.size()), std::vector<std::size_t>(t.values.size())};
    std::vector<std::size_t> mi(d);
    for (std::size_t i = 0; i < base.size(); ++i) {
      base.delinearize(i, mi);
      std::size_t flat = 0;
      for (std::size_t a = 0; a < d; ++a) {
        const std::size_t k = reversed[a] ? base.points(a) - 1 - mi[a] : mi[a];
        flat += k * base.stride(a);
      }
      out.values[i] = t.values[flat];
      out.argmax[i] = t.argmax[flat];
    }
    return out;
  }
  if (hooks) throw BadParams("simulated transforms need a diagonal A'");
  std::vector<double> pts(base.size() * d);
  parallel_for(base.size(), [&](std::size_t b, std::size_t e) {
    std::vector<double> x(d);
    for (std::size_t i = b; i < e; ++i) {
      base.point(i, x);
      for (std::size_t a = 0; a < d; ++a) x[a] += shift[a];
      const Eigen::VectorXd y = Ap * Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(d));
      for (std::size_t a = 0; a < d; ++a) pts[i * d + a] = y(static_cast<Eigen::Index>(a));
    }
  });
  return conjugate_at_points(h.grid, h.values, pts);
}

ConjStep conjugate_dp_step(const DiscreteFn& Jp, const DpModel& m, std::size_t t, const DualGrid& duals,
                           const TransformHooks* hooks) {
  if (t >= m.horizon()) throw BadParams("stage index beyond the horizon");
  if (!(Jp.grid == m.state_grid())) throw BadParams("value function is not on the model's state grid");
  if (duals.grid.dim() != Jp.grid.dim()) throw BadParams("dual grid dimension does not match the state");
  const double noise = 64.0 * std::numeric_limits<double>::epsilon() * Jp.max_abs();
  if (!is_axis_convex(Jp, noise)) throw NotConvex("value function is not convex along every axis");
  const StageData& st = m.stages[t];
  if (std::holds_alternative<FunctionCost>(st.gu)) throw NoConjugate("action cost has no conjugate");

  const auto jstar = forward_transform(Jp, duals, hooks);
  DiscreteFn h = slope_function(jstar.values, st, m.first_integer_action(), duals);
  const std::vector<double> zero(Jp.grid.dim(), 0.0);
  auto back = back_transform(h, st.Ap, Jp.grid, zero, hooks);

  const RegularGrid& X = Jp.grid;
  std::vector<double> value(X.size());
  parallel_for(X.size(), [&](std::size_t b, std::size_t e) {
    std::vector<double> x(X.dim());
    for (std::size_t i = b; i < e; ++i) {
      X.point(i, x);
      value[i] = back.values[i] + evaluate(st.gx, x);
    }
  }, 64);
  return ConjStep{DiscreteFn(X, std::move(value)), std::move(back.argmax), std::move(h)};
}

double discrete_lipschitz(const DiscreteFn& f) {
  const RegularGrid& g = f.grid;
  double total = 0.0;
  for (std::size_t a = 0; a < g.dim(); ++a) {
    const std::size_t n = g.points(a), stride = g.stride(a);
    const double h = g.spacing()[a];
    if (n < 2 || h == 0.0) continue;
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const std::size_t k = (i / stride) % n;
      if (k + 1 == n) continue;
      worst = std::max(worst, std::abs(f[i + stride] - f[i]) / (g.coord(a, k + 1) - g.coord(a, k)));
    }
    total += worst * worst;
  }
  return std::sqrt(total);
}

ErrorBounds error_bounds(const DpModel& m, std::size_t t, const DualGrid& duals, double L_J) {
  const StageData& st = m.stages.at(t);
  const double d = static_cast<double>(m.state_dim());
  const double lead = 1.0 + std::sqrt(d);
  ErrorBounds b;
  const double dH_state = m.state.continuous ? hausdorff_to_box(*m.state.continuous) : 0.0;
  b.E1 = dH_state > 0.0 ? lead * L_J * dH_state : 0.0;
  b.tau = max_norm(m.state_grid());

  // Range of -B'^T s over the dual box, coordinatewise.
  const RegularGrid& S = duals.grid;
  const std::size_t c = m.action_dim();
  std::vector<double> lo(c), hi(c);
  for (std::size_t i = 0; i < c; ++i) {
    double mid = 0.0, rad = 0.0;
    for (std::size_t a = 0; a < S.dim(); ++a) {
      const double w = -st.Bp(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(i));
      mid += w * 0.5 * (S.lower()[a] + S.upper()[a]);
      rad += std::abs(w) * 0.5 * (S.upper()[a] - S.lower()[a]);
    }
    lo[i] = mid - rad;
    hi[i] = mid + rad;
  }
  const double nB = operator_norm(st.Bp);
  if (nB == 0.0) {
    b.eta = 0.0;
  } else {
    const auto ub = conjugate_argmax_bound(st.gu, lo, hi, m.first_integer_action());
    double s2 = 0.0;
    for (double v : ub) s2 += v * v;
    b.eta = nB * std::sqrt(s2);
  }
  const double dH_dual = hausdorff_to_box(S);
  b.E2 = dH_dual > 0.0 ? lead * (b.tau + b.eta) * dH_dual : 0.0;
  return b;
}

DualGrid make_duals(const DiscreteFn& f, const DualPolicy& p) {
  switch (p.kind) {
    case DualPolicy::Kind::Canonical:
      if (p.points.size() != 1) throw BadParams("canonical dual policy needs one point count");
      return canonical_dual_grid(f, p.points[0], 64.0 * std::numeric_limits<double>::epsilon() * f.max_abs());
    case DualPolicy::Kind::Bounding: {
      std::vector<std::size_t> k = p.points;
      if (k.size() == 1 && f.grid.dim() > 1) k.assign(f.grid.dim(), p.points[0]);
      return bounding_dual_grid(f, k);
    }
    case DualPolicy::Kind::Fixed:
      if (!p.grid || p.grid->dim() != f.grid.dim()) throw BadParams("fixed dual grid has the wrong dimension");
      return DualGrid{*p.grid};
  }
  throw BadParams("unknown dual policy");
}

DiscreteFn terminal_values(const DpModel& m) { return tabulate(m.gT, m.state_grid()); }

double SolveResult::cumulative_bound(std::size_t from_stage) const {
  double s = 0.0;
  for (std::size_t t = from_stage; t < stages.size(); ++t) s += stages[t].bounds.sum();
  return s;
}

SolveResult solve(const DpModel& m, const std::vector<DualPolicy>& policies, const TransformHooks* hooks) {
  m.validate();
  const std::size_t T = m.horizon();
  if (policies.size() != 1 && policies.size() != T) throw BadParams("need one dual policy or one per stage");
  SolveResult r;
  r.terminal = terminal_values(m);
  r.stages.resize(T);
  const DiscreteFn* J = &r.terminal;
  for (std::size_t t = T; t-- > 0;) {
    const DualPolicy& pol = policies.size() == 1 ? policies[0] : policies[t];
    DualGrid duals = make_duals(*J, pol);
    const double LJ = discrete_lipschitz(*J);
    ConjStep step = conjugate_dp_step(*J, m, t, duals, hooks);
    StageReport& rep = r.stages[t];
    rep.stage = t;
    rep.bounds = error_bounds(m, t, duals, LJ);
    rep.lipschitz_in = LJ;
    try {
      rep.curvature = estimate_curvature(step.value);
    } catch (const TooFewPoints&) {
      rep.curvature.reset();
    }
    rep.duals = std::move(duals);
    rep.s_star = std::move(step.s_star);
    rep.value = std::move(step.value);
    J = &rep.value;
  }
  return r;
}

PolicyResult extract_policy(std::span<const double> s_star, const DpModel& m, std::size_t t, double eps) {
  const StageData& st = m.stages.at(t);
  const std::size_t d = m.state_dim();
  if (s_star.size() != d) throw BadParams("dual optimizer has the wrong dimension");
  const Eigen::VectorXd sigma =
      -(st.Bp.transpose() * Eigen::Map<const Eigen::VectorXd>(s_star.data(), static_cast<Eigen::Index>(d)));
  std::vector<double> s(sigma.data(), sigma.data() + sigma.size());
  PolicyResult r;
  r.u = cost_conjugate(st.gu, s, m.first_integer_action()).argmax;
  const double mu = strong_convexity(st.gu);
  if (mu > 0.0) r.bound = std::sqrt(4.0 * eps / mu);
  return r;
}

GridSizes epsilon_grid_sizes(double eps, std::size_t T) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw BadParams("epsilon must be positive");
  const double target = std::ceil(static_cast<double>(std::max<std::size_t>(T, 1)) / eps);
  if (target > 1e9) throw BadParams("epsilon too small for the grid budget");
  std::size_t n = 2;
  while (static_cast<double>(n) < target) n *= 2;
  return GridSizes{n, n};
}

void write_stage_csv(std::ostream& os, const SolveResult& r, const std::vector<std::optional<double>>& measured) {
  os << "stage,E1,E2,bound,cumulative_bound,lipschitz,measured\n";
  os << std::setprecision(12);
  for (std::size_t t = 0; t < r.stages.size(); ++t) {
    const auto& s = r.stages[t];
    os << t << ',' << s.bounds.E1 << ',' << s.bounds.E2 << ',' << s.bounds.sum() << ',' << r.cumulative_bound(t) << ','
       << s.lipschitz_in << ',';
    if (t < measured.size() && measured[t]) os << *measured[t];
    os << '\n';
  }
}

}  // namespace cdp
