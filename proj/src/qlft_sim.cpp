#include "cdp/qlft_sim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "cdp/conditioning.hpp"
#include "cdp/errors.hpp"

namespace cdp {

namespace {

constexpr std::size_t kNone = GoodPair::npos;
constexpr std::size_t kMaxOffending = 32;

double dual_spacing(std::span<const double> q) { return q.size() >= 2 ? q[1] - q[0] : 0.0; }

std::uint64_t multiplicity(double jump, double ds) { return ds > 0.0 ? jump_multiplicity(jump, ds) : 0; }

// First dual index l with c < q[l].
std::size_t first_above(std::span<const double> q, double c) {
  return static_cast<std::size_t>(std::upper_bound(q.begin(), q.end(), c) - q.begin());
}

double inverse_kappa(const DiscreteFn& f) {
  try {
    const auto c = estimate_curvature(f);
    return std::isfinite(c.condition_number) && c.condition_number > 0.0 ? 1.0 / c.condition_number : 0.0;
  } catch (const std::exception&) {
    return 0.0;
  }
}

double quad_modulus(const CostFn& g, bool largest) {
  const auto* q = std::get_if<QuadraticCost>(&g);
  if (!q || q->a.empty()) return 0.0;
  return largest ? *std::max_element(q->a.begin(), q->a.end()) : *std::min_element(q->a.begin(), q->a.end());
}

}  // namespace

void QlftDiagnostics::merge(const QlftDiagnostics& o) {
  relabel_mismatches += o.relabel_mismatches;
  value_mismatches += o.value_mismatches;
  uncovered += o.uncovered;
  dropped += o.dropped;
  out_of_interval += o.out_of_interval;
  duplicates += o.duplicates;
  nonconvex_slices += o.nonconvex_slices;
  for (const auto& m : o.offending)
    if (offending.size() < kMaxOffending) offending.push_back(m);
}

GoodSet qlft_good_set(const DiscreteFn& f, const DualGrid& duals) {
  if (f.grid.dim() != 1 || duals.grid.dim() != 1) throw BadParams("good set is defined for 1-D functions");
  if (!is_axis_convex(f)) throw NotConvex("good set needs a convex function");
  const auto q = duals.grid.axis_coords(0);
  const std::size_t n = f.size(), K = q.size();
  const auto c = discrete_gradients(f);
  GoodSet g;
  g.ds = dual_spacing(q);
  g.pairs.push_back({0, 0, 0, n == 1 || q[0] <= c[0]});
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const std::uint64_t mult = multiplicity(c[i] - c[i - 1], g.ds);
    g.W = std::max(g.W, mult);
    const std::size_t l = first_above(q, c[i - 1]);
    for (std::uint64_t m = 0; m < mult; ++m) {
      const std::size_t j = l + m;
      const bool in = j < K;
      g.dropped += !in;
      g.pairs.push_back({i, static_cast<std::size_t>(m), in ? j : kNone, in && q[j] <= c[i]});
    }
  }
  if (n > 1) g.pairs.push_back({n - 1, 0, K - 1, q[K - 1] >= c[n - 2]});
  return g;
}

SliceSim simulate_slice(const SliceTask& task, const double* ref_out, const std::size_t* ref_arg) {
  const auto xs = task.xs;
  const auto q = task.q;
  const std::size_t n = xs.size(), K = q.size();
  auto yv = [&](std::size_t i) { return task.y[i * task.ystride]; };
  SliceSim sim;
  if (K == 0 || n == 0) return sim;

  std::vector<double> c(n > 1 ? n - 1 : 0);
  bool convex = true;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double dx = xs[i + 1] - xs[i];
    if (!(dx > 0.0)) {
      convex = false;
      c[i] = 0.0;
      continue;
    }
    c[i] = (yv(i + 1) - yv(i)) / dx;
    if (i > 0 && c[i] < c[i - 1]) convex = false;
  }
  sim.diag.nonconvex_slices = convex ? 0 : 1;

  // Postselection and relabelling.
  const double ds = dual_spacing(q);
  std::vector<std::size_t> label(K, kNone), mval(K, 0);
  std::vector<unsigned char> interior(K, 0);
  sim.good = n > 1 ? 2 : 1;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double jump = c[i] - c[i - 1];
    const std::uint64_t mult = multiplicity(jump, ds);
    sim.W = std::max(sim.W, mult);
    sim.good += mult;
    const std::size_t l = first_above(q, c[i - 1]);
    for (std::uint64_t m = 0; m < mult; ++m) {
      const std::size_t j = l + m;
      if (j >= K) {
        sim.diag.dropped += static_cast<std::size_t>(mult - m);
        break;
      }
      if (q[j] > c[i]) {
        // The label left the member's subgradient interval; so do all later m.
        sim.diag.out_of_interval += static_cast<std::size_t>(mult - m);
        break;
      }
      if (interior[j]) {
        ++sim.diag.duplicates;
        continue;
      }
      label[j] = i;
      mval[j] = static_cast<std::size_t>(m);
      interior[j] = 1;
    }
  }
  // Endpoint members label the extreme duals when those lie outside the
  // gradient range.
  if (label[0] == kNone) {
    if (n == 1 || q[0] <= c[0]) label[0] = 0;
    else ++sim.diag.out_of_interval;
  }
  if (n > 1 && label[K - 1] == kNone) {
    if (q[K - 1] >= c[n - 2]) label[K - 1] = n - 1;
    else ++sim.diag.out_of_interval;
  }

  double xmax = 0.0, ymax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    xmax = std::max(xmax, std::abs(xs[i]));
    ymax = std::max(ymax, std::abs(yv(i)));
  }

  // Labelled duals: pairing at the relabelled point.
  for (std::size_t j = 0; j < K; ++j) {
    const std::size_t xb = label[j];
    if (xb == kNone) continue;
    const double qj = q[j];
    const double raw = qj * xs[xb] - yv(xb);
    const double tau = 1e-10 * (std::abs(qj) * xmax + ymax) + std::numeric_limits<double>::min();
    if (ref_out[j] - raw > tau) {
      ++sim.diag.relabel_mismatches;
      if (sim.diag.offending.size() < kMaxOffending) sim.diag.offending.push_back({xb, mval[j], j});
    }
    // The kernel reports the smallest maximizing index; on a convex slice the
    // maximizers are contiguous, so walk to the left end of the tie run.
    std::size_t best = xb;
    double bv = raw;
    while (best > 0) {
      const double v = qj * xs[best - 1] - yv(best - 1);
      if (!(v >= bv)) break;
      bv = v, --best;
    }
    if (best == xb) {
      while (best + 1 < n) {
        const double v = qj * xs[best + 1] - yv(best + 1);
        if (!(v > bv)) break;
        bv = v, ++best;
      }
    }
    task.out[j] = bv;
    task.arg[j] = best;
  }

  // Unlabelled runs: scan between the maximizers of the labelled neighbours.
  for (std::size_t a = 0; a < K;) {
    if (label[a] != kNone) {
      ++a;
      continue;
    }
    std::size_t b = a;
    while (b + 1 < K && label[b + 1] == kNone) ++b;
    std::size_t lo = a > 0 ? task.arg[a - 1] : 0;
    std::size_t hi = b + 1 < K ? task.arg[b + 1] : n - 1;
    if (lo > hi) std::swap(lo, hi);
    scan_slice(SliceTask{xs.subspan(lo, hi - lo + 1), task.y + lo * task.ystride, task.ystride, q.subspan(a, b - a + 1),
                         task.out + a, task.arg + a, task.axis, task.slice});
    for (std::size_t j = a; j <= b; ++j) task.arg[j] += lo;
    sim.diag.uncovered += b - a + 1;
    a = b + 1;
  }

  for (std::size_t j = 0; j < K; ++j)
    if (task.out[j] != ref_out[j] || task.arg[j] != ref_arg[j]) ++sim.diag.value_mismatches;
  return sim;
}

QlftResult simulate_qlft(const DiscreteFn& f, const DualGrid& duals) {
  if (f.grid.dim() != 1 || duals.grid.dim() != 1) throw BadParams("simulate_qlft is defined for 1-D functions");
  const auto ref = dlft_bruteforce(f, duals);
  const auto xs = f.grid.axis_coords(0);
  const auto q = duals.grid.axis_coords(0);
  std::vector<double> out(q.size());
  std::vector<std::size_t> arg(q.size());
  const SliceSim sim =
      simulate_slice(SliceTask{xs, f.values.data(), 1, q, out.data(), arg.data(), 0, 0}, ref.fn.values.data(),
                     ref.argmax.data());
  QlftResult r{Conjugate{DiscreteFn(duals.grid, std::move(out)), std::move(arg)}, 1.0, sim.good, 0, sim.W, sim.diag};
  r.total = static_cast<std::uint64_t>(f.size()) * sim.W;
  if (sim.W > 0) r.prob = static_cast<double>(sim.good) / static_cast<double>(r.total);
  return r;
}

namespace {

// Collects per-slice statistics while the DP runs its transforms through the
// simulated solver.
class Recorder {
 public:
  TransformHooks hooks() {
    TransformHooks h;
    h.begin_transform = [this](const char* kind, const DiscreteFn& input) { begin(kind, input); };
    h.before_pass = [this](std::size_t axis, std::size_t count) { pass(axis, count); };
    h.solver = [this](const SliceTask& t) { solve(t); };
    return h;
  }

  SimTrace finish() {
    close();
    SimTrace t;
    t.stages = std::move(stages_);
    for (const auto& s : t.stages) {
      t.overall_prob *= s.prob;
      t.diag.merge(s.diag);
    }
    t.expected_amp_rounds = 1.0 / std::sqrt(t.overall_prob);
    return t;
  }

 private:
  struct PassData {
    SimPass meta;
    std::vector<SliceSim> slices;
    std::vector<std::size_t> points;
  };

  void begin(const char* kind, const DiscreteFn& input) {
    close();
    SimStage s;
    s.index = stages_.size();
    s.kind = kind;
    s.kappa_bound = inverse_kappa(input);
    stages_.push_back(std::move(s));
    open_ = true;
  }

  void pass(std::size_t axis, std::size_t count) {
    if (!open_) throw BadParams("simulated pass outside a transform");
    passes_.push_back(PassData{SimPass{axis, count, 0, 0, 0, 1.0}, std::vector<SliceSim>(count),
                               std::vector<std::size_t>(count, 0)});
  }

  void solve(const SliceTask& t) {
    const std::size_t K = t.q.size();
    std::vector<double> ref_out(K);
    std::vector<std::size_t> ref_arg(K);
    scan_slice(SliceTask{t.xs, t.y, t.ystride, t.q, ref_out.data(), ref_arg.data(), t.axis, t.slice});
    PassData& p = passes_.back();
    p.slices[t.slice] = simulate_slice(t, ref_out.data(), ref_arg.data());
    p.points[t.slice] = t.xs.size();
  }

  void close() {
    if (!open_) return;
    SimStage& s = stages_.back();
    for (auto& p : passes_) {
      for (std::size_t k = 0; k < p.slices.size(); ++k) {
        p.meta.good += p.slices[k].good;
        p.meta.W = std::max(p.meta.W, p.slices[k].W);
        p.meta.points = std::max(p.meta.points, p.points[k]);
        s.diag.merge(p.slices[k].diag);
      }
      const std::uint64_t total = static_cast<std::uint64_t>(p.meta.slices) * p.meta.points * p.meta.W;
      if (p.meta.W > 0) p.meta.prob = static_cast<double>(p.meta.good) / static_cast<double>(total);
      s.good += p.meta.good;
      s.total += total;
      s.prob *= p.meta.prob;
      s.passes.push_back(p.meta);
    }
    passes_.clear();
    open_ = false;
  }

  std::vector<SimStage> stages_;
  std::vector<PassData> passes_;
  bool open_ = false;
};

void require_diagonal(const DpModel& m) {
  for (const auto& st : m.stages)
    for (Eigen::Index r = 0; r < st.Ap.rows(); ++r)
      for (Eigen::Index c = 0; c < st.Ap.cols(); ++c)
        if (r != c && st.Ap(r, c) != 0.0) throw BadParams("simulate_qdp needs diagonal A' at every stage");
}

}  // namespace

std::optional<double> model_gamma(const DpModel& m) {
  if (m.stages.empty()) return std::nullopt;
  PhiInputs p;
  p.t = 0;
  p.T = m.horizon();
  p.Lgx = quad_modulus(m.stages[0].gx, true);
  p.mugx = quad_modulus(m.stages[0].gx, false);
  p.Lgu = quad_modulus(m.stages[0].gu, true);
  p.mugu = quad_modulus(m.stages[0].gu, false);
  p.LJT = quad_modulus(m.gT, true);
  p.muJT = quad_modulus(m.gT, false);
  if (!(p.mugx > 0 && p.mugu > 0 && p.muJT > 0)) return std::nullopt;
  return gamma(p).value;
}

QdpResult simulate_qdp(const DpModel& m, const std::vector<DualPolicy>& policies) {
  require_diagonal(m);
  Recorder rec;
  const TransformHooks hooks = rec.hooks();
  SolveResult r = solve(m, policies, &hooks);
  QdpResult out{std::move(r.stages[0].value), rec.finish()};
  out.trace.gamma = model_gamma(m);
  if (out.trace.gamma)
    out.trace.gamma_power_bound = std::pow(*out.trace.gamma, static_cast<double>(m.state_dim() * m.horizon()));
  return out;
}

QdpResult simulate_qdp(const StochModel& m, const std::vector<DualPolicy>& policies) {
  require_diagonal(m.model);
  Recorder rec;
  const TransformHooks hooks = rec.hooks();
  StochSolveResult r = stoch_solve(m, policies, &hooks);
  QdpResult out{std::move(r.first.value), rec.finish()};
  out.trace.gamma = model_gamma(m.model);
  std::size_t rmax = 1;
  for (const auto& n : m.noise) rmax = std::max(rmax, n.size());
  if (out.trace.gamma)
    out.trace.gamma_power_bound =
        std::pow(*out.trace.gamma, static_cast<double>(m.model.state_dim() * rmax * m.model.horizon()));
  return out;
}

std::uint64_t point_query_cost(const SimTrace& trace, std::size_t N) {
  if (!(trace.overall_prob > 0.0)) throw BadParams("overall probability must be positive");
  const double v = std::sqrt(static_cast<double>(N)) / std::sqrt(trace.overall_prob);
  const double r = std::round(v);
  // Exact squares such as sqrt(256) / sqrt(1) land on integers.
  return static_cast<std::uint64_t>(std::abs(v - r) <= 1e-12 * r ? r : std::ceil(v));
}

void to_json(nlohmann::json& j, const QlftDiagnostics& d) {
  nlohmann::json off = nlohmann::json::array();
  for (const auto& m : d.offending) off.push_back({{"i", m.i}, {"m", m.m}, {"j", m.j}});
  j = nlohmann::json{{"relabel_mismatches", d.relabel_mismatches},
                     {"value_mismatches", d.value_mismatches},
                     {"uncovered", d.uncovered},
                     {"dropped", d.dropped},
                     {"out_of_interval", d.out_of_interval},
                     {"duplicates", d.duplicates},
                     {"nonconvex_slices", d.nonconvex_slices},
                     {"offending", off}};
}

void to_json(nlohmann::json& j, const SimTrace& t) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : t.stages) {
    nlohmann::json passes = nlohmann::json::array();
    for (const auto& p : s.passes)
      passes.push_back({{"axis", p.axis}, {"slices", p.slices}, {"points", p.points}, {"good", p.good},
                        {"W", p.W}, {"prob", p.prob}});
    stages.push_back({{"stage", s.index},
                      {"kind", s.kind},
                      {"good", s.good},
                      {"total", s.total},
                      {"postselect_prob", s.prob},
                      {"kappa_bound", s.kappa_bound},
                      {"passes", passes},
                      {"diagnostics", s.diag}});
  }
  j = nlohmann::json{{"stages", stages},
                     {"overall_prob", t.overall_prob},
                     {"expected_amp_rounds", t.expected_amp_rounds},
                     {"gamma", t.gamma ? nlohmann::json(*t.gamma) : nlohmann::json()},
                     {"gamma_power_bound", t.gamma_power_bound ? nlohmann::json(*t.gamma_power_bound) : nlohmann::json()},
                     {"diagnostics", t.diag}};
}

void write_trace_table(std::ostream& os, const SimTrace& t) {
  os << std::left << std::setw(7) << "stage" << std::setw(9) << "kind" << std::right << std::setw(12) << "good"
     << std::setw(12) << "total" << std::setw(14) << "prob" << std::setw(14) << "bound" << '\n';
  os << std::setprecision(6);
  for (const auto& s : t.stages) {
    os << std::left << std::setw(7) << s.index << std::setw(9) << s.kind << std::right << std::setw(12) << s.good
       << std::setw(12) << s.total << std::setw(14) << s.prob << std::setw(14) << s.kappa_bound << '\n';
  }
  os << "overall_prob " << t.overall_prob << '\n';
  os << "expected_amp_rounds " << t.expected_amp_rounds << '\n';
  if (t.gamma_power_bound) os << "gamma_power_bound " << *t.gamma_power_bound << '\n';
  os << "relabel_mismatches " << t.diag.relabel_mismatches << '\n';
  os << "value_mismatches " << t.diag.value_mismatches << '\n';
  os << "uncovered " << t.diag.uncovered << '\n';
}

}  // namespace cdp
