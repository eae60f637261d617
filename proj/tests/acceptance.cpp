// Acceptance checks 1-11. Prints one PASS/FAIL line per criterion. The exit
// status is nonzero only when a criterion outside the recorded open items
// fails, so regressions stop the test run while the open items stay visible.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cdp/cli.hpp"
#include "cdp/conditioning.hpp"
#include "cdp/dp_det.hpp"
#include "cdp/dp_stoch.hpp"
#include "cdp/instances.hpp"
#include "cdp/lft.hpp"
#include "cdp/qlft_sim.hpp"
#include "support.hpp"

using namespace cdp;
using cdp::testing::Rng;
using cdp::testing::uniform;
using cdp::testing::uniform_int;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

// Criteria whose failure is a recorded finding rather than a regression.
const std::set<std::string> kOpen{"4", "6", "8"};

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Eigen::MatrixXd scalar(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

QuadraticCost quad1(double a, double b = 0.0) { return QuadraticCost::isotropic(1, a, b); }

// x' = A x + B u, g_x = ax x^2/2, g_u = au u^2/2, g_T = aT x^2/2 on [-R, R].
DpModel lqr_1d(double R, std::size_t N, std::size_t T, double A, double B, double ax, double au, double aT) {
  return stationary_model(MixedSpace::continuous_only(RegularGrid::line(-R, R, N)),
                          MixedSpace::continuous_only(RegularGrid::line(-R, R, 2)), scalar(A), scalar(B), quad1(ax),
                          quad1(au), quad1(aT), T);
}

double max_dev_fn(const DiscreteFn& f, const std::function<double(std::span<const double>)>& exact) {
  double m = 0.0;
  std::vector<double> x(f.grid.dim());
  for (std::size_t i = 0; i < f.size(); ++i) {
    f.grid.point(i, x);
    m = std::max(m, std::abs(f[i] - exact(x)));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Instance set shared by criteria 1 and 2

struct LftInstance {
  std::string family;
  DiscreteFn f;
  std::optional<DualGrid> canonical;  // dual grid on which f** = f is expected
  DualGrid bounding;
};

std::size_t log_uniform(Rng& rng, std::size_t lo, std::size_t hi) {
  const double v = std::exp(uniform(rng, std::log(static_cast<double>(lo)), std::log(static_cast<double>(hi) + 1.0)));
  return std::clamp<std::size_t>(static_cast<std::size_t>(v), lo, hi);
}

// Per-axis canonical grid: spacing no larger than the smallest gradient jump
// along that axis, so every subdifferential interval holds a dual point.
std::optional<DualGrid> axis_canonical(const DiscreteFn& f, std::size_t budget) {
  const RegularGrid& g = f.grid;
  std::vector<double> lo(g.dim()), hi(g.dim());
  std::vector<std::size_t> K(g.dim());
  std::size_t total = 1;
  for (std::size_t a = 0; a < g.dim(); ++a) {
    const std::size_t n = g.points(a), st = g.stride(a);
    const double h = g.spacing()[a];
    std::vector<double> c;
    for (std::size_t i = 0; i + 1 < n; ++i) c.push_back((f[(i + 1) * st] - f[i * st]) / h);
    double jump = INFINITY;
    for (std::size_t i = 1; i < c.size(); ++i) jump = std::min(jump, c[i] - c[i - 1]);
    lo[a] = c.front();
    hi[a] = c.back();
    if (c.size() == 1) {
      K[a] = 1;
    } else {
      if (!(jump > 0.0)) return std::nullopt;
      K[a] = static_cast<std::size_t>(std::ceil((hi[a] - lo[a]) / jump)) + 1;
    }
    total *= K[a];
  }
  if (total > budget) return std::nullopt;
  return DualGrid{RegularGrid(lo, hi, K)};
}

// Integer-slope duals covering every lattice subgradient.
std::optional<DualGrid> lattice_duals(const DiscreteFn& f, std::size_t budget) {
  const RegularGrid& g = f.grid;
  std::vector<double> lo(g.dim()), hi(g.dim());
  std::vector<std::size_t> K(g.dim());
  std::size_t total = 1;
  for (std::size_t a = 0; a < g.dim(); ++a) {
    double mn = INFINITY, mx = -INFINITY;
    const std::size_t n = g.points(a), st = g.stride(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if ((i / st) % n + 1 == n) continue;
      const double c = f[i + st] - f[i];
      mn = std::min(mn, c), mx = std::max(mx, c);
    }
    lo[a] = mn - 1;
    hi[a] = mx + 1;
    K[a] = static_cast<std::size_t>(mx - mn) + 3;
    total *= K[a];
  }
  if (total > budget) return std::nullopt;
  return DualGrid{RegularGrid(lo, hi, K)};
}

DualGrid random_bounding(Rng& rng, const DiscreteFn& f, std::size_t budget) {
  const std::size_t d = f.grid.dim();
  const auto per = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(budget), 1.0 / static_cast<double>(d))));
  std::vector<std::size_t> k(d);
  for (auto& x : k) x = log_uniform(rng, 4, std::max<std::size_t>(4, per));
  return bounding_dual_grid(f, k);
}

std::vector<std::size_t> axis_sizes(Rng& rng, std::size_t d, std::size_t budget) {
  const auto per = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(budget), 1.0 / static_cast<double>(d))));
  std::vector<std::size_t> n(d);
  for (auto& x : n) x = uniform_int(rng, 2, per);
  return n;
}

std::vector<LftInstance> lft_instances() {
  Rng rng(20240601);
  std::vector<LftInstance> out;
  const std::size_t budget = 4096;
  while (out.size() < 500) {
    const int family = static_cast<int>(out.size() % 5);
    LftInstance in;
    if (family == 0) {
      in.family = "1-D real";
      in.f = testing::random_convex_1d(rng, log_uniform(rng, 2, 1024), 0.5, 2.0);
      in.canonical = axis_canonical(in.f, budget);
    } else if (family == 1) {
      in.family = "1-D integer";
      const std::size_t n = log_uniform(rng, 3, 2048);
      const auto iv = testing::random_integer_convex(rng, n, 2);
      in.f = DiscreteFn(RegularGrid::line(0, static_cast<double>(n - 1), n), std::vector<double>(iv.begin(), iv.end()));
      in.canonical = lattice_duals(in.f, budget);
    } else if (family == 2) {
      in.family = "separable";
      const std::size_t d = uniform_int(rng, 2, 3);
      in.f = testing::random_separable(rng, axis_sizes(rng, d, d == 2 ? 1024 : 512));
      in.canonical = axis_canonical(in.f, budget);
    } else if (family == 3) {
      in.family = "lattice";
      const std::size_t d = uniform_int(rng, 2, 3);
      in.f = testing::random_lattice(rng, axis_sizes(rng, d, d == 2 ? 256 : 27), 1.0, 1.0).f;
      in.canonical = lattice_duals(in.f, budget);
    } else {
      in.family = "psd quadratic";
      const std::size_t d = uniform_int(rng, 2, 3);
      in.f = testing::random_psd_quadratic(rng, axis_sizes(rng, d, budget));
    }
    if (family != 4 && !in.canonical) continue;  // redraw instances whose canonical grid exceeds the budget
    in.bounding = random_bounding(rng, in.f, budget);
    out.push_back(std::move(in));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Criteria

Verdict criterion1(const std::vector<LftInstance>& set) {
  std::size_t checked = 0, mismatched = 0;
  for (const auto& in : set) {
    std::vector<const DualGrid*> grids{&in.bounding};
    if (in.canonical) grids.push_back(&*in.canonical);
    for (const DualGrid* duals : grids) {
      const auto fast = dlft_fast(in.f, *duals);
      const auto brute = dlft_bruteforce(in.f, *duals);
      ++checked;
      if (fast.fn.values != brute.fn.values) ++mismatched;
    }
  }
  // Runtime of the 1-D fast path with K = N over the instance size range.
  // Each size is timed in batches of at least 20 ms; the fastest batch counts.
  std::vector<double> sizes, times;
  for (std::size_t n = std::size_t{1} << 6; n <= (std::size_t{1} << 12); n *= 2) {
    RegularGrid g = RegularGrid::line(-1, 1, n);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = g.coord(0, i) * g.coord(0, i);
    const DiscreteFn f(g, v);
    const DualGrid duals{RegularGrid::line(-2, 2, n)};
    double best = INFINITY;
    for (int batch = 0; batch < 5; ++batch) {
      std::size_t calls = 0;
      const auto t0 = std::chrono::steady_clock::now();
      double elapsed = 0.0;
      do {
        const auto c = dlft_fast(f, duals);
        if (c.fn.size() != n) return {false, "wrong output size"};
        ++calls;
      } while ((elapsed = seconds_since(t0)) < 0.02);
      best = std::min(best, elapsed / static_cast<double>(calls));
    }
    sizes.push_back(2.0 * static_cast<double>(n));
    times.push_back(best);
  }
  const double slope = fit_slope(sizes, times);
  const bool ok = mismatched == 0 && std::abs(slope - 1.0) <= 0.15;
  return {ok, std::to_string(set.size()) + " instances, " + std::to_string(checked) + " transforms, " +
                  std::to_string(mismatched) + " mismatches; 1-D runtime exponent " + fmt(slope, 3) +
                  " over N+K in [2^7, 2^13]"};
}

Verdict criterion2(const std::vector<LftInstance>& set) {
  std::size_t checked = 0, failed = 0, skipped = 0;
  double worst = 0.0;
  for (const auto& in : set) {
    if (!in.canonical) {
      ++skipped;
      continue;
    }
    const auto b = biconjugate(in.f, *in.canonical);
    const double err = testing::max_abs_diff(b.values, in.f.values) / (1.0 + in.f.max_abs());
    worst = std::max(worst, err);
    ++checked;
    if (err > 1e-9) ++failed;
  }
  return {failed == 0 && checked > 0,
          std::to_string(checked) + " instances, worst max|f**-f|/(1+max|f|) = " + fmt(worst, 3) + ", " +
              std::to_string(failed) + " over 1e-9; " + std::to_string(skipped) +
              " non-separable quadratics have no per-axis canonical grid and are excluded"};
}

Verdict criterion3() {
  Rng rng(303);
  std::size_t violations = 0;
  double worst_ratio = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const double A = uniform(rng, -1.0, 1.0), B = uniform(rng, 0.3, 1.5);
    const double ax = uniform(rng, 0.0, 2.0), au = uniform(rng, 0.5, 3.0), aT = uniform(rng, 0.5, 3.0);
    const double bT = uniform(rng, -0.5, 0.5);
    const double R = 2.0;
    DpModel m = lqr_1d(R, 129, 1, A, B, ax, au, aT);
    m.gT = quad1(aT, bT);
    const DiscreteFn J = terminal_values(m);
    const DualGrid duals = make_duals(J, DualPolicy::canonical(129));
    const auto step = conjugate_dp_step(J, m, 0, duals);
    const auto bounds = error_bounds(m, 0, duals, discrete_lipschitz(J));
    const double ur = 2 * R / B;
    const RegularGrid actions = RegularGrid::line(-ur, ur, 8001);
    BellmanOptions opt;
    opt.reference = [&](std::span<const double> y) { return aT * y[0] * y[0] / 2 + bT * y[0]; };
    const auto bell = bellman_step(J, m, 0, actions, opt);
    if (bell.violations) return {false, "Bellman oracle found infeasible states"};
    const double du = actions.spacing()[0];
    const double action_slack = (au + aT * B * B) * du * du / 8;
    const double allowed = bounds.sum() + bell.slack + action_slack;
    for (std::size_t i = 0; i < J.size(); ++i) {
      const double dev = std::abs(step.value[i] - bell.value[i]);
      worst_ratio = std::max(worst_ratio, dev / allowed);
      if (dev > allowed) ++violations;
    }
  }
  return {violations == 0, "100 instances x 129 states, " + std::to_string(violations) +
                               " points over E1+E2+slack, worst deviation/allowance " + fmt(worst_ratio, 3)};
}

Verdict criterion4() {
  auto exact = [](std::size_t T, std::size_t t) {
    return [k = static_cast<double>(T - t + 1)](std::span<const double> x) { return x[0] * x[0] / k; };
  };
  std::size_t bad = 0;
  std::string acc;
  for (std::size_t T = 2; T <= 6; ++T) {
    const DpModel m = lqr_1d(2.0, 257, T, 1, 1, 0, 2, 2);
    const auto r = solve(m, {DualPolicy::bounding({256})});
    double worst = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      const double dev = max_dev_fn(r.stages[t].value, exact(T, t));
      worst = std::max(worst, dev / r.cumulative_bound(t));
      if (dev > r.cumulative_bound(t)) ++bad;
    }
    acc += (T > 2 ? "," : "") + fmt(worst, 3);
  }
  // Doubling N - 1 = K.
  const std::size_t T = 3;
  std::vector<double> err, bound;
  for (std::size_t n = 64; n <= 1024; n *= 2) {
    const DpModel m = lqr_1d(2.0, n + 1, T, 1, 1, 0, 2, 2);
    const auto r = solve(m, {DualPolicy::bounding({n})});
    double e = 0.0;
    for (std::size_t t = 0; t < T; ++t) e = std::max(e, max_dev_fn(r.stages[t].value, exact(T, t)));
    err.push_back(e);
    bound.push_back(r.cumulative_bound(0));
  }
  bool conv = true;
  std::string ratios, bratios;
  for (std::size_t i = 1; i < err.size(); ++i) {
    const double q = err[i] / err[i - 1];
    conv = conv && q >= 0.4 && q <= 0.6;
    ratios += (i > 1 ? "," : "") + fmt(q, 3);
    bratios += (i > 1 ? "," : "") + fmt(bound[i] / bound[i - 1], 3);
  }
  return {bad == 0 && conv, "accumulation: " + std::to_string(bad) + " stages over the summed bound (worst dev/bound per T=2..6: " +
                               acc + "); convergence: error ratios per doubling " + ratios + " (required [0.4,0.6]), bound ratios " +
                               bratios};
}

Verdict criterion5() {
  Rng rng(505);
  std::size_t tested = 0, bad = 0;
  double worst = 0.0;
  for (int rep = 0; rep < 40; ++rep) {
    const std::size_t d = rep % 4 == 3 ? 2 : 1;
    LqrParams p;
    p.d = d;
    p.T = 1;
    p.N = d == 1 ? 129 : 33;
    p.cx.assign(d, 0.0);
    p.cu.clear();
    p.cT.clear();
    for (std::size_t a = 0; a < d; ++a) {
      p.cx[a] = uniform(rng, 0.0, 2.0);
      p.cu.push_back(uniform(rng, 0.3, 3.0));
      p.cT.push_back(uniform(rng, 0.3, 3.0));
    }
    const DpModel m = make_lqr(p);
    std::vector<std::size_t> k(d, p.N - 1);
    const auto r = solve(m, {DualPolicy::bounding(k)});
    const auto& st = r.stages[0];
    const double eps = st.bounds.sum();
    const double mu = 2.0 * *std::min_element(p.cu.begin(), p.cu.end());
    const double radius = std::sqrt(4.0 * eps / mu);
    std::vector<double> x(d);
    for (std::size_t i = 0; i < st.value.size(); ++i) {
      st.value.grid.point(i, x);
      const auto pol = extract_policy(st.duals.grid.point(st.s_star[i]), m, 0, eps);
      double dist2 = 0.0;
      for (std::size_t a = 0; a < d; ++a) {
        // min_u cu u^2 + cT (x + u)^2 gives u = -cT x / (cu + cT).
        const double ustar = -p.cT[a] * x[a] / (p.cu[a] + p.cT[a]);
        dist2 += (pol.u[a] - ustar) * (pol.u[a] - ustar);
      }
      worst = std::max(worst, std::sqrt(dist2) / radius);
      ++tested;
      if (std::sqrt(dist2) > radius) ++bad;
    }
  }
  return {bad == 0, std::to_string(tested) + " states on 40 instances, " + std::to_string(bad) +
                        " over sqrt(4(E1+E2)/mu), worst distance/radius " + fmt(worst, 3)};
}

Verdict criterion6() {
  Rng rng(606);
  std::size_t disagree = 0, not_one = 0;
  double worst = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    PhiInputs p;
    p.T = uniform_int(rng, 1, 12);
    p.t = uniform_int(rng, 0, p.T);
    p.mugx = uniform(rng, 0.1, 5.0), p.Lgx = p.mugx * uniform(rng, 1.0, 10.0);
    p.mugu = uniform(rng, 0.1, 5.0), p.Lgu = p.mugu * uniform(rng, 1.0, 10.0);
    p.muJT = uniform(rng, 0.1, 5.0), p.LJT = p.muJT * uniform(rng, 1.0, 10.0);
    const double c = phi_closed_form(p), r = phi_recursive(p);
    const double rel = std::abs(c - r) / std::max(std::abs(c), std::abs(r));
    worst = std::max(worst, rel);
    if (rel > 1e-9) ++disagree;
  }
  for (int rep = 0; rep < 200; ++rep) {
    PhiInputs p;
    p.T = uniform_int(rng, 1, 12);
    p.t = uniform_int(rng, 0, p.T);
    p.Lgx = p.mugx = uniform(rng, 0.1, 5.0);
    p.Lgu = p.mugu = uniform(rng, 0.1, 5.0);
    p.LJT = p.muJT = uniform(rng, 0.1, 5.0);
    if (phi_closed_form(p) != 1.0 || phi_recursive(p) != 1.0) ++not_one;
  }
  return {disagree == 0 && not_one == 0, std::to_string(disagree) + "/1000 random inputs disagree beyond 1e-9 (worst relative gap " +
                                             fmt(worst, 3) + "); " + std::to_string(not_one) + "/200 kappa=1 inputs differ from 1"};
}

Verdict criterion7() {
  Rng rng(707);
  std::size_t bad = 0, points = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const double A = uniform(rng, -1.0, 1.0), B = uniform(rng, 0.5, 1.5);
    const double ax = uniform(rng, 0.0, 2.0), au = uniform(rng, 0.5, 3.0), aT = uniform(rng, 0.5, 3.0);
    const double delta = uniform(rng, 0.05, 0.4), p = uniform(rng, 0.2, 0.8);
    const double R = 2.0;
    const StochModel sm{lqr_1d(R, 129, 2, A, B, ax, au, aT), {NoiseModel{{{-delta}, {delta}}, {p, 1 - p}}}};
    const DiscreteFn V = expected_terminal(sm);
    const DualGrid duals = make_duals(V, DualPolicy::canonical(129));
    const auto st = conj_stoch_step(V, sm, 1, duals);
    const auto bounds = stoch_error_bounds(sm, 1, duals, discrete_lipschitz(V));
    const double ur = 3 * R / B;
    const RegularGrid actions = RegularGrid::line(-ur, ur, 6001);
    const auto oracle = post_decision_bellman_step(V, sm, 1, actions);
    const double du = actions.spacing()[0];
    const double action_slack = (au + aT * B * B) * du * du / 8;
    for (std::size_t i = 0; i < V.size(); ++i) {
      if (std::abs(V.grid.coord(0, i)) + delta > R) continue;  // successors must stay feasible
      ++points;
      if (std::abs(st.value[i] - oracle.value[i]) > bounds.sum() + oracle.slack + action_slack) ++bad;
    }
  }
  std::size_t reductions = 0, identical = 0;
  for (int rep = 0; rep < 10; ++rep) {
    const DpModel dm = lqr_1d(2.0, 65, 1 + rep % 4, uniform(rng, -1, 1), uniform(rng, 0.5, 1.5), uniform(rng, 0, 2),
                              uniform(rng, 0.5, 3), uniform(rng, 0.5, 3));
    const StochModel sm{dm, {NoiseModel::point_mass(1)}};
    const auto det = solve(dm, {DualPolicy::bounding({50})});
    const auto sto = stoch_solve(sm, {DualPolicy::bounding({50})});
    bool same = sto.first.value.values == det.stages[0].value.values && sto.first.s_star == det.stages[0].s_star;
    for (std::size_t t = 0; t + 1 < dm.horizon(); ++t) same = same && sto.post[t].value.values == det.stages[t + 1].value.values;
    ++reductions;
    identical += same;
  }
  return {bad == 0 && identical == reductions, std::to_string(bad) + "/" + std::to_string(points) +
                                                   " feasible points over E1+E2+slack on 50 instances; zero-noise reduction bit-identical on " +
                                                   std::to_string(identical) + "/" + std::to_string(reductions)};
}

// Smallest z >= 0 with #{outcomes with total <= z} / 2^n >= num/den.
std::int64_t quantile_by_sorting(const std::vector<std::int64_t>& a, const Rational& lambda) {
  std::vector<std::int64_t> tot{0};
  for (auto ai : a) {
    const std::size_t k = tot.size();
    for (std::size_t i = 0; i < k; ++i) tot.push_back(tot[i] + ai);
  }
  std::sort(tot.begin(), tot.end());
  const auto total = static_cast<__int128>(tot.size());
  for (std::size_t i = 0; i < tot.size(); ++i) {
    if (i + 1 < tot.size() && tot[i + 1] == tot[i]) continue;
    if (static_cast<__int128>(i + 1) * lambda.den >= total * lambda.num) return tot[i];
  }
  return tot.back();
}

struct HardTally {
  std::size_t cases = 0, match = 0, window = 0;
  double seconds = 0.0;
};

HardTally run_hard(const std::vector<std::pair<std::vector<std::int64_t>, Rational>>& cases, unsigned refinement,
                   bool recourse) {
  HardTally t;
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& [a, lambda] : cases) {
    HardInstanceParams p;
    p.a = a;
    p.lambda = lambda;
    p.refinement = refinement;
    p.recourse_after_demand = recourse;
    const HardInstance h = make_hard_instance(p);
    const auto r = stoch_solve(h.model, hard_instance_duals(h));
    const double u = hard_first_action(h, r);
    const auto z = static_cast<double>(quantile_by_sorting(a, lambda));
    ++t.cases;
    t.match += std::llround(u) == static_cast<long long>(z);
    const double tol = 1e-9 * (1.0 + z);
    t.window += u >= z - 0.125 - tol && u <= z + tol;
  }
  t.seconds = seconds_since(t0);
  return t;
}

Verdict criterion8() {
  Rng rng(808);
  std::vector<std::pair<std::vector<std::int64_t>, Rational>> cases;
  const Rational lambdas[] = {Rational::make(1, 4), Rational::make(1, 2), Rational::make(3, 4)};
  for (std::size_t n = 2; n <= 8; ++n)
    for (const auto& l : lambdas) {
      std::vector<std::int64_t> a(n);
      for (auto& x : a) x = static_cast<std::int64_t>(uniform_int(rng, 1, 5));
      cases.emplace_back(a, l);
    }
  const HardTally d0 = run_hard(cases, 0, false), d1 = run_hard(cases, 1, false);
  const HardTally r0 = run_hard(cases, 0, true), r1 = run_hard(cases, 1, true);
  const auto n = static_cast<double>(cases.size());
  const bool ok = d0.match >= 0.95 * n && d1.match == cases.size() && d0.window == cases.size() &&
                  d1.window == cases.size();
  auto line = [](const HardTally& t) {
    return std::to_string(t.match) + "/" + std::to_string(t.cases) + " match, " + std::to_string(t.window) + " in window, " +
           fmt(t.seconds, 3) + " s";
  };
  return {ok, "default: " + line(d0) + "; refined: " + line(d1) + " | with a recourse purchase after the last demand: default " +
                  line(r0) + "; refined " + line(r1)};
}

// |good| from the definition: two endpoints plus floor(jump / ds) per interior point.
std::uint64_t enumerated_good(const std::vector<double>& f, double h, double ds) {
  std::uint64_t g = f.size() > 1 ? 2 : 1;
  for (std::size_t i = 1; i + 1 < f.size(); ++i) {
    const double jump = (f[i + 1] - f[i]) / h - (f[i] - f[i - 1]) / h;
    g += static_cast<std::uint64_t>(std::floor(jump / ds));
  }
  return g;
}

std::uint64_t enumerated_W(const std::vector<double>& f, double h, double ds) {
  std::uint64_t w = 0;
  for (std::size_t i = 1; i + 1 < f.size(); ++i) {
    const double jump = (f[i + 1] - f[i]) / h - (f[i] - f[i - 1]) / h;
    w = std::max<std::uint64_t>(w, static_cast<std::uint64_t>(std::floor(jump / ds)));
  }
  return w;
}

Verdict criterion9() {
  // Fidelity on per-axis convex families.
  std::size_t models = 0, value_equal = 0, clean = 0;
  auto fidelity = [&](const DpModel& m, const std::vector<DualPolicy>& pol) {
    const QdpResult q = simulate_qdp(m, pol);
    const SolveResult r = solve(m, pol);
    ++models;
    value_equal += q.value.values == r.stages[0].value.values;
    clean += q.trace.diag.relabel_mismatches == 0 && q.trace.diag.value_mismatches == 0;
  };
  for (std::size_t T = 1; T <= 5; ++T) fidelity(lqr_1d(2.0, 65, T, 1, 1, 0, 2, 2), {DualPolicy::canonical(65)});
  {
    LqrParams p;
    p.d = 2;
    p.N = 17;
    p.T = 2;
    fidelity(make_lqr(p), {DualPolicy::bounding({16, 16})});
  }
  fidelity(make_pwl_instance(PwlParams{}), {DualPolicy::canonical(65)});
  {
    PwlParams p;
    p.knots = {-1.5, -0.5, 0.5, 1.5};
    p.values = {1, 0, 0, 2};
    p.N = 33;
    p.T = 3;
    fidelity(make_pwl_instance(p), {DualPolicy::canonical(33)});
  }

  // Single transforms on integer data: probability against the enumeration.
  Rng rng(909);
  std::size_t prob_cases = 0, prob_equal = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = uniform_int(rng, 3, 300);
    const auto iv = testing::random_integer_convex(rng, n, 4);
    std::vector<double> v(iv.begin(), iv.end());
    const DiscreteFn f(RegularGrid::line(0, static_cast<double>(n - 1), n), v);
    const double c0 = v[1] - v[0], c1 = v[n - 1] - v[n - 2];
    const std::size_t scale = std::size_t{1} << uniform_int(rng, 0, 2);  // dual spacing 1, 1/2 or 1/4
    const auto K = static_cast<std::size_t>(c1 - c0) * scale + 1;
    if (K < 2) continue;
    const DualGrid duals{RegularGrid::line(c0, c1, K)};
    const double ds = 1.0 / static_cast<double>(scale);
    const QlftResult q = simulate_qlft(f, duals);
    const std::uint64_t W = enumerated_W(v, 1.0, ds), good = enumerated_good(v, 1.0, ds);
    const double expect = W == 0 ? 1.0 : static_cast<double>(good) / (static_cast<double>(n) * static_cast<double>(W));
    ++prob_cases;
    prob_equal += q.W == W && q.good == good && q.prob == expect;
  }

  // Per-stage probability floor across horizons for the kappa = 1 family.
  double floor = 1.0;
  std::string mins;
  for (std::size_t T = 1; T <= 8; ++T) {
    const QdpResult q = simulate_qdp(lqr_1d(2.0, 65, T, 1, 1, 0, 2, 2), {DualPolicy::canonical(65)});
    double mn = 1.0;
    for (const auto& s : q.trace.stages) mn = std::min(mn, s.prob);
    floor = std::min(floor, mn);
    mins += (T > 1 ? "," : "") + fmt(mn, 3);
  }
  const bool ok = value_equal == models && clean == models && prob_equal == prob_cases && floor >= 0.25;
  return {ok, std::to_string(value_equal) + "/" + std::to_string(models) + " models bit-identical, " +
                  std::to_string(clean) + "/" + std::to_string(models) + " without mismatches; probability = |good|/(N W) on " +
                  std::to_string(prob_equal) + "/" + std::to_string(prob_cases) +
                  " transforms; kappa=1 per-stage minimum for T=1..8: " + mins + " (floor 0.25)"};
}

Verdict criterion10() {
  Rng rng(1010);
  std::size_t cases = 0, brute_ok = 0, lib_ok = 0;
  for (std::size_t d = 1; d <= 10; ++d) {
    for (std::size_t k = 0; k < d; ++k) {
      std::vector<int> alpha(d);
      for (auto& b : alpha) b = static_cast<int>(uniform_int(rng, 0, 1));
      const std::size_t states = std::size_t{1} << d, actions = d > 1 ? std::size_t{1} << (d - 1) : 1;
      // Brute force: y_k = x_k, the other coordinates are the action bits.
      bool brute = true;
      for (std::size_t xs = 0; xs < states; ++xs) {
        const int xk = static_cast<int>((xs >> k) & 1);
        int best = 1 << 30;
        for (std::size_t us = 0; us < actions; ++us) {
          int worst = std::abs(xk - alpha[k]);
          std::size_t bit = 0;
          for (std::size_t i = 0; i < d; ++i) {
            if (i == k) continue;
            const int yi = static_cast<int>((us >> bit++) & 1);
            worst = std::max(worst, std::abs(yi - alpha[i]));
          }
          best = std::min(best, worst);
        }
        brute = brute && best == std::abs(xk - alpha[k]);
      }
      const DpModel m = make_lower_bound_instance(d, k, alpha);
      const auto step = bellman_step(terminal_values(m), m, 0, m.action_grid());
      bool lib = step.violations == 0;
      std::vector<double> x(d);
      for (std::size_t i = 0; i < step.value.size(); ++i) {
        step.value.grid.point(i, x);
        lib = lib && step.value[i] == std::abs(x[k] - static_cast<double>(alpha[k]));
      }
      ++cases;
      brute_ok += brute;
      lib_ok += lib;
    }
  }
  return {brute_ok == cases && lib_ok == cases, std::to_string(cases) + " (d, k) pairs for d = 1..10: enumeration exact on " +
                                                    std::to_string(brute_ok) + ", library Bellman step exact on " +
                                                    std::to_string(lib_ok)};
}

Verdict criterion11() {
  cli::RunConfig c;
  c.command = "bench";
  for (std::size_t n = 64; n <= 8192; n *= 2) c.sizes.push_back(n);
  c.out = "bench.csv";
  std::ostringstream out, err;
  if (cli::run(c, out, err) != cli::kOk) return {false, "bench failed: " + err.str()};
  std::ifstream in(c.out);
  std::string line;
  std::getline(in, line);
  std::vector<double> N, tb, tc;
  while (std::getline(in, line)) {
    double n, k, m, b, t;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf", &n, &k, &m, &b, &t) != 5) return {false, "bad bench row"};
    N.push_back(n), tb.push_back(b), tc.push_back(t);
  }
  std::vector<double> Nl, tbl, tcl;
  bool crossover = true;
  for (std::size_t i = 0; i < N.size(); ++i) {
    if (N[i] >= 512) Nl.push_back(N[i]), tbl.push_back(tb[i]), tcl.push_back(tc[i]);
    if (N[i] >= 4096) crossover = crossover && tc[i] < tb[i];
  }
  const double sb = fit_slope(Nl, tbl), sc = fit_slope(Nl, tcl);
  const bool ok = sc <= 1.3 && sb >= 1.7 && sb <= 2.3 && crossover;
  return {ok, "exponents over N >= 2^9: conjugate " + fmt(sc, 3) + " (near-linear: <= 1.3), Bellman " + fmt(sb, 3) +
                  " (N M with M = N: [1.7, 2.3]); conjugate faster at every N >= 2^12: " + (crossover ? "yes" : "no") +
                  "; rows in bench.csv"};
}

}  // namespace

int main() {
  std::setvbuf(stdout, nullptr, _IOLBF, 0);
  const auto t0 = std::chrono::steady_clock::now();
  const auto set = lft_instances();
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"1", [&] { return criterion1(set); }},
      {"2", [&] { return criterion2(set); }},
      {"3", criterion3},
      {"4", criterion4},
      {"5", criterion5},
      {"6", criterion6},
      {"7", criterion7},
      {"8", criterion8},
      {"9", criterion9},
      {"10", criterion10},
      {"11", criterion11},
  };
  int regressions = 0;
  for (const auto& [id, fn] : criteria) {
    const auto c0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::string note;
    if (!v.pass && kOpen.count(id)) note = " [open item]";
    if (!v.pass && !kOpen.count(id)) ++regressions;
    std::printf("%s %s: %s (%.1f s)%s\n", v.pass ? "PASS" : "FAIL", id.c_str(), v.detail.c_str(), seconds_since(c0),
                note.c_str());
  }
  std::printf("total %.1f s\n", seconds_since(t0));
  return regressions == 0 ? 0 : 1;
}
