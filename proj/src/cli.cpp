#include "cdp/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "cdp/dp_det.hpp"
#include "cdp/dp_stoch.hpp"
#include "cdp/errors.hpp"
#include "cdp/instances.hpp"
#include "cdp/parallel.hpp"
#include "cdp/qlft_sim.hpp"
#include "json.hpp"

namespace cdp::cli {

namespace {

using nlohmann::json;

const std::set<std::string> kCommands{"solve", "solve-stoch", "simulate", "bench", "oracle"};

// ---------------------------------------------------------------------------
// Instance mini-language

class Params {
 public:
  explicit Params(const InstanceSpec& s) : spec_(s) {}

  bool has(const std::string& k) const { return spec_.params.count(k) != 0; }

  const std::string& raw(const std::string& k) {
    used_.insert(k);
    return spec_.params.at(k);
  }

  double real(const std::string& k, double def) { return has(k) ? to_double(k, raw(k)) : def; }

  std::size_t size(const std::string& k, std::size_t def) {
    if (!has(k)) return def;
    const std::string& v = raw(k);
    std::size_t pos = 0;
    unsigned long long x = 0;
    try {
      if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
      x = std::stoull(v, &pos);
    } catch (const std::exception&) {
      throw BadParams("instance key " + k + " needs a nonnegative integer, got " + v);
    }
    if (pos != v.size()) throw BadParams("instance key " + k + " needs a nonnegative integer, got " + v);
    return static_cast<std::size_t>(x);
  }

  bool flag(const std::string& k, bool def) {
    if (!has(k)) return def;
    const std::string& v = raw(k);
    if (v == "1" || v == "true") return true;
    if (v == "0" || v == "false") return false;
    throw BadParams("instance key " + k + " needs 0 or 1, got " + v);
  }

  std::vector<double> reals(const std::string& k, std::vector<double> def) {
    if (!has(k)) return def;
    std::vector<double> out;
    for (const auto& item : split(raw(k))) out.push_back(to_double(k, item));
    return out;
  }

  std::vector<std::int64_t> ints(const std::string& k) {
    std::vector<std::int64_t> out;
    for (const auto& item : split(raw(k))) {
      const Rational r = parse_rational(item);
      if (r.den != 1) throw BadParams("instance key " + k + " needs integers, got " + item);
      out.push_back(r.num);
    }
    return out;
  }

  /// Throws on keys the family does not read, so typos do not pass silently.
  void finish() const {
    for (const auto& [k, v] : spec_.params)
      if (!used_.count(k)) throw BadParams("unknown key '" + k + "' for instance " + spec_.name);
  }

 private:
  static std::vector<std::string> split(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ';')) out.push_back(item);
    if (out.empty()) throw BadParams("empty list value");
    return out;
  }

  static double to_double(const std::string& k, const std::string& v) {
    try {
      if (v.find('/') != std::string::npos) return parse_rational(v).value();
      std::size_t pos = 0;
      const double x = std::stod(v, &pos);
      if (pos == v.size() && std::isfinite(x)) return x;
    } catch (const std::exception&) {
    }
    throw BadParams("instance key " + k + " needs a number, got " + v);
  }

  const InstanceSpec& spec_;
  std::set<std::string> used_;
};

// ---------------------------------------------------------------------------
// Problem assembly

struct Problem {
  DpModel det;
  std::optional<StochModel> stoch;
  std::optional<LqrParams> lqr;
  std::optional<HardInstance> hard;
  std::optional<HardInstanceParams> hard_params;
  std::vector<DualPolicy> policies;
};

std::size_t grid_intervals(const RunConfig& c, std::size_t T) {
  return epsilon_grid_sizes(*c.epsilon, T).state_points;
}

DualPolicy bounding_for(const RegularGrid& X, std::optional<std::size_t> K) {
  std::vector<std::size_t> k;
  for (std::size_t a = 0; a < X.dim(); ++a) k.push_back(std::max<std::size_t>(4, K ? *K : X.points(a) - 1));
  return DualPolicy::bounding(std::move(k));
}

NoiseModel two_point(std::size_t d, double delta) {
  return NoiseModel{{std::vector<double>(d, -delta), std::vector<double>(d, delta)}, {0.5, 0.5}};
}

Problem lqr_problem(const RunConfig& c, Params& p) {
  LqrParams q;
  q.d = p.size("d", q.d);
  q.T = c.horizon ? *c.horizon : p.size("T", q.T);
  q.R = p.real("R", q.R);
  q.cx = p.reals("cx", q.cx);
  q.cu = p.reals("cu", q.cu);
  q.cT = p.reals("cT", q.cT);
  std::optional<std::size_t> K;
  if (c.epsilon) {
    K = grid_intervals(c, q.T);
    q.N = *K + 1;
  }
  q.N = p.size("N", q.N);
  q.M = p.size("M", q.N);
  const double noise = p.real("noise", 0.0);
  Problem pr;
  pr.det = make_lqr(q);
  pr.lqr = q;
  if (noise != 0.0) pr.stoch = StochModel{pr.det, {two_point(q.d, std::abs(noise))}};
  pr.policies = {bounding_for(pr.det.state_grid(), K)};
  return pr;
}

Problem pwl_problem(const RunConfig& c, Params& p) {
  PwlParams q;
  q.knots = p.reals("knots", q.knots);
  q.values = p.reals("values", q.values);
  q.rho = p.real("rho", q.rho);
  q.R = p.real("R", q.R);
  q.T = c.horizon ? *c.horizon : p.size("T", q.T);
  std::optional<std::size_t> K;
  if (c.epsilon) {
    K = grid_intervals(c, q.T);
    q.N = *K + 1;
  }
  q.N = p.size("N", q.N);
  q.M = p.size("M", q.N);
  Problem pr;
  pr.det = make_pwl_instance(q);
  pr.policies = {bounding_for(pr.det.state_grid(), K)};
  return pr;
}

Problem lower_bound_problem(const RunConfig& c, Params& p, std::mt19937_64& rng) {
  if (c.horizon && *c.horizon != 1) throw BadParams("the lower-bound instance has horizon 1");
  const std::size_t d = p.size("d", 3);
  const std::size_t k = p.size("k", 0);
  std::vector<int> alpha;
  if (p.has("alpha")) {
    for (auto v : p.ints("alpha")) alpha.push_back(static_cast<int>(v));
  } else {
    std::uniform_int_distribution<int> bit(0, 1);
    for (std::size_t i = 0; i < d; ++i) alpha.push_back(bit(rng));
  }
  Problem pr;
  pr.det = make_lower_bound_instance(d, k, alpha);
  pr.policies = {bounding_for(pr.det.state_grid(), std::nullopt)};
  return pr;
}

Problem hard_problem(const RunConfig& c, Params& p, std::mt19937_64& rng) {
  if (c.horizon) throw BadParams("the hard instance horizon is fixed by the number of demands");
  HardInstanceParams q;
  if (p.has("a")) {
    q.a = p.ints("a");
  } else {
    const std::size_t n = p.size("n", 4);
    const auto amax = static_cast<std::int64_t>(p.size("amax", 5));
    if (amax < 1) throw BadParams("amax must be >= 1");
    std::uniform_int_distribution<std::int64_t> draw(1, amax);
    for (std::size_t i = 0; i < n; ++i) q.a.push_back(draw(rng));
  }
  if (p.has("lambda")) q.lambda = parse_rational(p.raw("lambda"));
  if (p.has("beta")) q.beta = p.real("beta", 0.0);
  if (p.has("Ux")) q.Ux = p.real("Ux", 0.0);
  if (p.has("Uu")) q.Uu = p.real("Uu", 0.0);
  q.terminal_multiplier = p.real("multiplier", q.terminal_multiplier);
  q.state_spacing = p.real("spacing", q.state_spacing);
  q.refinement = static_cast<unsigned>(p.size("refinement", 0));
  q.linear = p.flag("linear", false);
  q.recourse_after_demand = p.flag("recourse", false);
  Problem pr;
  pr.hard = make_hard_instance(q);
  pr.hard_params = q;
  pr.stoch = pr.hard->model;
  pr.det = pr.stoch->model;
  pr.policies = hard_instance_duals(*pr.hard);
  return pr;
}

DpModel regrid(const DpModel& m, std::size_t intervals) {
  DpModel out = m;
  if (out.state.continuous) {
    const RegularGrid& g = *out.state.continuous;
    out.state.continuous = RegularGrid(g.lower(), g.upper(), std::vector<std::size_t>(g.dim(), intervals + 1));
  }
  return out;
}

template <class V>
void resize_like_last(V& v, std::size_t T) {
  if (v.empty()) throw BadParams("model has no stages");
  while (v.size() < T) v.push_back(v.back());
  v.resize(T);
}

Problem file_problem(const RunConfig& c) {
  std::ifstream in(c.model_path);
  if (!in) throw std::runtime_error("cannot open model file " + c.model_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("model file " + c.model_path + " is not valid JSON: " + e.what());
  }
  Problem pr;
  try {
    if (j.contains("noise")) {
      pr.stoch = j.get<StochModel>();
      pr.det = pr.stoch->model;
    } else {
      pr.det = j.get<DpModel>();
    }
  } catch (const json::exception& e) {
    throw std::runtime_error("model file " + c.model_path + " does not match the schema: " + e.what());
  }
  if (c.horizon) {
    resize_like_last(pr.det.stages, *c.horizon);
    if (pr.stoch && pr.stoch->noise.size() > 1) resize_like_last(pr.stoch->noise, *c.horizon);
  }
  std::optional<std::size_t> K;
  if (c.epsilon) {
    K = grid_intervals(c, pr.det.horizon());
    pr.det = regrid(pr.det, *K);
  }
  if (pr.stoch) pr.stoch->model = pr.det;
  pr.policies = {bounding_for(pr.det.state_grid(), K)};
  return pr;
}

Problem load_problem(const RunConfig& c) {
  if (!c.model_path.empty()) return file_problem(c);
  const InstanceSpec spec = parse_instance_spec(c.instance);
  Params p(spec);
  std::mt19937_64 rng(c.seed);
  Problem pr;
  if (spec.name == "lqr") pr = lqr_problem(c, p);
  else if (spec.name == "pwl") pr = pwl_problem(c, p);
  else if (spec.name == "lower_bound") pr = lower_bound_problem(c, p, rng);
  else if (spec.name == "hard") pr = hard_problem(c, p, rng);
  else throw BadParams("unknown instance family '" + spec.name + "' (lqr, pwl, lower_bound, hard)");
  p.finish();
  return pr;
}

void save_model(const RunConfig& c, const Problem& pr) {
  if (c.save_model.empty()) return;
  std::ofstream f(c.save_model);
  if (!f) throw std::runtime_error("cannot write " + c.save_model);
  json j;
  if (pr.stoch) j = *pr.stoch;
  else j = pr.det;
  f << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Measurements

double max_dev(const DiscreteFn& a, const DiscreteFn& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

double max_dev_lqr(const DiscreteFn& J, const std::vector<double>& P) {
  double m = 0.0;
  std::vector<double> x(J.grid.dim());
  for (std::size_t i = 0; i < J.grid.size(); ++i) {
    J.grid.point(i, x);
    double v = 0.0;
    for (std::size_t a = 0; a < x.size(); ++a) v += P[a] * x[a] * x[a];
    m = std::max(m, std::abs(J.values[i] - v));
  }
  return m;
}

json stage_json(const StageReport& s, double cumulative, std::optional<double> measured) {
  json j{{"stage", s.stage},          {"E1", s.bounds.E1},     {"E2", s.bounds.E2},
         {"bound", s.bounds.sum()},    {"cumulative_bound", cumulative}, {"lipschitz", s.lipschitz_in}};
  j["measured"] = measured ? json(*measured) : json(nullptr);
  return j;
}

// ---------------------------------------------------------------------------
// Commands

struct Report {
  std::string body;
  bool violation = false;
};

Report cmd_solve(const RunConfig& c, const Problem& pr, std::ostream& err) {
  const SolveResult r = solve(pr.det, pr.policies);
  std::vector<std::optional<double>> measured(r.stages.size());
  std::size_t violations = 0;
  if (c.oracle) {
    if (pr.lqr) {
      const auto P = lqr_value_coefficients(*pr.lqr);
      for (std::size_t t = 0; t < r.stages.size(); ++t) measured[t] = max_dev_lqr(r.stages[t].value, P[t]);
    } else {
      const BellmanSolve b = bellman_solve(pr.det, pr.det.action_grid());
      violations = b.violations;
      for (std::size_t t = 0; t < r.stages.size(); ++t) measured[t] = max_dev(r.stages[t].value, b.values[t]);
    }
  }
  std::ostringstream os;
  if (c.format == "csv") {
    write_stage_csv(os, r, measured);
  } else {
    json j{{"version", 1}, {"command", "solve"}, {"stages", json::array()}, {"violations", violations}};
    for (std::size_t t = 0; t < r.stages.size(); ++t)
      j["stages"].push_back(stage_json(r.stages[t], r.cumulative_bound(t), measured[t]));
    os << std::setprecision(12) << j.dump(2) << '\n';
  }
  std::size_t exceeded = 0;
  for (std::size_t t = 0; t < measured.size(); ++t)
    if (measured[t] && *measured[t] > r.cumulative_bound(t)) ++exceeded;
  err << "solve: T=" << r.stages.size() << " states=" << pr.det.state_grid().size()
      << " total_bound=" << r.cumulative_bound(0);
  if (c.oracle) err << " stages_over_cumulative_bound=" << exceeded;
  if (violations) err << " infeasible_states=" << violations;
  err << '\n';
  return {os.str(), violations != 0};
}

Report cmd_solve_stoch(const RunConfig& c, const Problem& pr, std::ostream& err) {
  if (!pr.stoch) throw BadParams("solve-stoch needs a model with noise (lqr:noise=..., hard:..., or JSON with \"noise\")");
  const StochModel& m = *pr.stoch;
  const StochSolveResult r = stoch_solve(m, pr.policies);
  std::optional<double> first_measured;
  std::size_t violations = r.out_of_box;
  if (c.oracle && !pr.hard) {
    const RegularGrid U = m.model.action_grid();
    DiscreteFn J = terminal_values(m.model);
    for (std::size_t t = m.model.horizon(); t-- > 0;) {
      BellmanResult b = stoch_bellman_step(J, m, t, U);
      violations += b.violations;
      J = std::move(b.value);
    }
    first_measured = max_dev(r.first.value, J);
  }
  json extra;
  if (pr.hard) {
    const HardInstance& h = *pr.hard;
    const double u = hard_first_action(h, r);
    extra["first_action"] = u;
    extra["rounded_first_action"] = std::llround(u);
    extra["a"] = pr.hard_params->a;
    extra["lambda"] = to_string(pr.hard_params->lambda);
    if (c.oracle) {
      const std::int64_t z = newsvendor_oracle(pr.hard_params->a, pr.hard_params->lambda);
      extra["newsvendor_oracle"] = z;
      extra["matches_oracle"] = std::llround(u) == z;
      // The window [u* - 1/8, u*] is checked up to rounding of the recovered action.
      const double zd = static_cast<double>(z), tol = 1e-9 * (1.0 + zd);
      extra["in_window"] = u >= zd - 0.125 - tol && u <= zd + tol;
    }
  }
  std::ostringstream os;
  os << std::setprecision(12);
  if (c.format == "csv") {
    os << "stage,kind,E1,E2,bound,cumulative_bound,lipschitz,measured\n";
    for (std::size_t t = 0; t < r.post.size(); ++t) {
      const auto& s = r.post[t];
      os << t << ",post," << s.bounds.E1 << ',' << s.bounds.E2 << ',' << s.bounds.sum() << ','
         << r.cumulative_bound(t) << ',' << s.lipschitz_in << ",\n";
    }
    const auto& f = r.first;
    os << "0,first," << f.bounds.E1 << ',' << f.bounds.E2 << ',' << f.bounds.sum() << ',' << r.total_bound() << ','
       << f.lipschitz_in << ',';
    if (first_measured) os << *first_measured;
    os << '\n';
  } else {
    json j{{"version", 1}, {"command", "solve-stoch"}, {"post", json::array()}, {"out_of_box", r.out_of_box},
           {"violations", violations}};
    for (std::size_t t = 0; t < r.post.size(); ++t)
      j["post"].push_back(stage_json(r.post[t], r.cumulative_bound(t), std::nullopt));
    j["first"] = stage_json(r.first, r.total_bound(), first_measured);
    if (!extra.is_null()) j["hard"] = extra;
    os << j.dump(2) << '\n';
  }
  err << "solve-stoch: T=" << m.model.horizon() << " total_bound=" << r.total_bound()
      << " out_of_box=" << r.out_of_box;
  if (extra.contains("first_action")) err << " first_action=" << extra["first_action"].get<double>();
  err << '\n';
  return {os.str(), violations != 0};
}

std::vector<DualPolicy> simulation_policies(const Problem& pr) {
  // The canonical grid keeps every slice label on the lattice in one dimension.
  const RegularGrid X = pr.det.state_grid();
  if (X.dim() == 1 && !pr.hard) return {DualPolicy::canonical(std::max<std::size_t>(4, X.points(0)))};
  return pr.policies;
}

Report cmd_simulate(const RunConfig& c, const Problem& pr, std::ostream& err) {
  const auto policies = simulation_policies(pr);
  const QdpResult q = pr.stoch ? simulate_qdp(*pr.stoch, policies) : simulate_qdp(pr.det, policies);
  std::ostringstream os;
  if (c.format == "csv") {
    write_trace_table(os, q.trace);
  } else {
    json j = q.trace;
    j["version"] = 1;
    os << std::setprecision(12) << j.dump(2) << '\n';
  }
  err << "simulate: overall_prob=" << q.trace.overall_prob << " relabel_mismatches=" << q.trace.diag.relabel_mismatches
      << " value_mismatches=" << q.trace.diag.value_mismatches << '\n';
  return {os.str(), !q.trace.diag.clean()};
}

template <class F>
double seconds(F&& f) {
  // Repeats short runs so each row averages over at least 50 ms.
  using clock = std::chrono::steady_clock;
  std::size_t reps = 0;
  const auto start = clock::now();
  double elapsed = 0.0;
  do {
    f();
    ++reps;
    elapsed = std::chrono::duration<double>(clock::now() - start).count();
  } while (elapsed < 0.05);
  return elapsed / static_cast<double>(reps);
}

Report cmd_bench(const RunConfig& c, std::ostream& err) {
  std::vector<std::size_t> sizes = c.sizes;
  if (sizes.empty())
    for (std::size_t n = 64; n <= 8192; n *= 2) sizes.push_back(n);
  std::ostringstream os;
  os << "N,K,M,t_bellman,t_conj\n" << std::setprecision(6);
  for (std::size_t n : sizes) {
    if (n < 4) throw BadParams("bench sizes must be >= 4");
    LqrParams q;
    q.T = c.horizon ? *c.horizon : 1;
    q.N = n + 1;
    q.M = n + 1;
    const DpModel m = make_lqr(q);
    const RegularGrid U = m.action_grid();
    const std::vector<DualPolicy> pol{DualPolicy::bounding({n})};
    const double tb = seconds([&] { (void)bellman_solve(m, U); });
    const double tc = seconds([&] { (void)solve(m, pol); });
    os << q.N << ',' << n << ',' << U.size() << ',' << tb << ',' << tc << '\n';
    err << "bench: N=" << q.N << " t_bellman=" << tb << " t_conj=" << tc << '\n';
  }
  return {os.str(), false};
}

Report cmd_oracle(const RunConfig& c) {
  std::ostringstream os;
  if (c.a.empty()) throw BadParams("oracle needs --a");
  if (c.oracle_kind == "newsvendor") {
    if (c.lambda.empty()) throw BadParams("oracle newsvendor needs --lambda");
    const Rational lambda = parse_rational(c.lambda);
    const std::int64_t z = newsvendor_oracle(c.a, lambda);
    if (c.format == "csv") os << z << '\n';
    else os << json{{"a", c.a}, {"lambda", to_string(lambda)}, {"quantile", z}}.dump(2) << '\n';
  } else if (c.oracle_kind == "cdf") {
    if (!c.Lambda) throw BadParams("oracle cdf needs --Lambda");
    const Rational p = cdf_convolution_oracle(c.a, *c.Lambda);
    if (c.format == "csv") os << to_string(p) << '\n';
    else os << std::setprecision(17) << json{{"a", c.a}, {"Lambda", *c.Lambda}, {"cdf", to_string(p)}, {"value", p.value()}}.dump(2) << '\n';
  } else {
    throw BadParams("oracle kind must be newsvendor or cdf");
  }
  return {os.str(), false};
}

}  // namespace

InstanceSpec parse_instance_spec(const std::string& s) {
  InstanceSpec spec;
  const auto colon = s.find(':');
  spec.name = s.substr(0, colon);
  if (spec.name.empty()) throw BadParams("instance spec needs a family name");
  if (colon == std::string::npos) return spec;
  std::stringstream ss(s.substr(colon + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == item.size())
      throw BadParams("instance parameter '" + item + "' is not key=value");
    const std::string key = item.substr(0, eq);
    if (!spec.params.emplace(key, item.substr(eq + 1)).second) throw BadParams("duplicate instance key " + key);
  }
  return spec;
}

void RunConfig::validate() const {
  if (!kCommands.count(command)) throw BadParams("unknown command '" + command + "'");
  if (format != "csv" && format != "json") throw BadParams("format must be csv or json");
  if (epsilon && !(*epsilon > 0.0 && std::isfinite(*epsilon))) throw BadParams("epsilon must be positive");
  if (horizon && *horizon == 0) throw BadParams("horizon must be >= 1");
  if (command == "solve" || command == "solve-stoch" || command == "simulate") {
    if (model_path.empty() == instance.empty()) throw BadParams("give exactly one of --model and --instance");
  }
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    config.validate();
    set_max_threads(config.threads);
    Report rep;
    if (config.command == "bench") {
      rep = cmd_bench(config, err);
    } else if (config.command == "oracle") {
      rep = cmd_oracle(config);
    } else {
      const Problem pr = load_problem(config);
      save_model(config, pr);
      if (config.command == "solve") rep = cmd_solve(config, pr, err);
      else if (config.command == "solve-stoch") rep = cmd_solve_stoch(config, pr, err);
      else rep = cmd_simulate(config, pr, err);
    }
    if (config.out.empty()) {
      out << rep.body;
    } else {
      std::ofstream f(config.out, std::ios::binary);
      if (!f) throw std::runtime_error("cannot write " + config.out);
      f << rep.body;
      if (!f) throw std::runtime_error("write failed for " + config.out);
    }
    if (rep.violation) {
      err << "feasibility or simulator flags raised\n";
      return kViolation;
    }
    return kOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kError;
  }
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conjugate dynamic programming toolkit"};
  app.require_subcommand(1);
  RunConfig c;
  double eps = 0.0;
  std::size_t horizon = 0;

  auto common = [&](CLI::App* s, bool model) {
    if (model) {
      auto* mo = s->add_option("--model", c.model_path, "Model JSON file");
      auto* in = s->add_option("--instance", c.instance, "Builtin instance name:key=val,...");
      mo->excludes(in);
      s->add_option("--epsilon", eps, "Target accuracy; resizes state and dual grids");
      s->add_flag("--oracle", c.oracle, "Measure against an oracle");
      s->add_option("--save-model", c.save_model, "Write the model JSON");
    }
    s->add_option("--horizon", horizon, "Horizon override");
    s->add_option("--out", c.out, "Output path (default stdout)");
    s->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    s->add_option("--seed", c.seed, "Seed for randomized instances");
    s->add_option("--threads", c.threads, "Worker cap (0 = hardware)");
  };
  common(app.add_subcommand("solve", "Deterministic conjugate DP with per-stage bounds"), true);
  common(app.add_subcommand("solve-stoch", "Stochastic conjugate DP with per-stage bounds"), true);
  common(app.add_subcommand("simulate", "Classical simulation of the quantum pipeline"), true);
  auto* bench = app.add_subcommand("bench", "Bellman vs conjugate DP timings");
  common(bench, false);
  bench->add_option("--sizes", c.sizes, "Grid intervals per row")->delimiter(',');
  auto* oracle = app.add_subcommand("oracle", "Exact newsvendor and CDF oracles");
  common(oracle, false);
  oracle->add_option("kind", c.oracle_kind, "newsvendor or cdf")->required();
  oracle->add_option("--a", c.a, "Outcome sizes a_i")->delimiter(',')->required();
  oracle->add_option("--lambda", c.lambda, "Critical ratio (p/q or decimal)");
  std::int64_t Lambda = 0;
  auto* L = oracle->add_option("--Lambda", Lambda, "CDF threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }
  c.command = app.get_subcommands().front()->get_name();
  const CLI::App* sub = app.get_subcommands().front();
  if (const auto* o = sub->get_option_no_throw("--epsilon"); o && o->count()) c.epsilon = eps;
  if (sub->count("--horizon")) c.horizon = horizon;
  if (L->count()) c.Lambda = Lambda;
  return run(c, out, err);
}

}  // namespace cdp::cli
