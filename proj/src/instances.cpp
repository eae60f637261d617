#include "cdp/instances.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cdp/errors.hpp"
#include "cdp/parallel.hpp"

namespace cdp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> broadcast(const std::vector<double>& c, std::size_t d, const char* what) {
  if (c.size() == d) return c;
  if (c.size() == 1) return std::vector<double>(d, c[0]);
  throw BadParams(std::string("lqr: ") + what + " needs 1 or d coefficients");
}

// sum_i c_i x_i^2 on an unbounded box.
QuadraticCost square_cost(const std::vector<double>& c) {
  QuadraticCost q = QuadraticCost::isotropic(c.size(), 0.0);
  for (std::size_t i = 0; i < c.size(); ++i) q.a[i] = 2.0 * c[i];
  return q;
}

Eigen::MatrixXd scalar(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

NoiseModel two_point(double lo, double hi) { return NoiseModel{{{lo}, {hi}}, {0.5, 0.5}}; }

double round_up(double v, double h) { return std::ceil(v / h - 1e-9) * h; }

std::size_t points_for(double width, double h) {
  const double n = std::round(width / h);
  if (n > 5e7) throw BadParams("grid too large for the requested spacing");
  return static_cast<std::size_t>(n) + 1;
}

}  // namespace

Rational Rational::make(std::int64_t num, std::int64_t den) {
  if (den == 0) throw BadParams("rational with zero denominator");
  if (den < 0) num = -num, den = -den;
  const std::int64_t g = std::gcd(num, den);
  return Rational{num / g, den / g};
}

Rational parse_rational(const std::string& s) {
  if (s.empty()) throw BadParams("empty rational");
  try {
    if (const auto slash = s.find('/'); slash != std::string::npos) {
      std::size_t a = 0, b = 0;
      const long long p = std::stoll(s.substr(0, slash), &a), q = std::stoll(s.substr(slash + 1), &b);
      if (a != slash || b != s.size() - slash - 1) throw BadParams("malformed rational: " + s);
      return Rational::make(p, q);
    }
    const auto dot = s.find('.');
    std::string digits = s;
    std::int64_t den = 1;
    if (dot != std::string::npos) {
      const std::size_t frac = s.size() - dot - 1;
      if (frac > 15) throw BadParams("too many decimals: " + s);
      digits = s.substr(0, dot) + s.substr(dot + 1);
      for (std::size_t i = 0; i < frac; ++i) den *= 10;
    }
    std::size_t used = 0;
    const long long p = std::stoll(digits, &used);
    if (used != digits.size()) throw BadParams("malformed rational: " + s);
    return Rational::make(p, den);
  } catch (const std::logic_error& e) {
    if (dynamic_cast<const BadParams*>(&e)) throw;
    throw BadParams("malformed rational: " + s);
  }
}

std::string to_string(const Rational& r) {
  return r.den == 1 ? std::to_string(r.num) : std::to_string(r.num) + "/" + std::to_string(r.den);
}

DpModel make_lqr(const LqrParams& p) {
  if (p.d == 0 || p.T == 0) throw BadParams("lqr needs d >= 1 and T >= 1");
  if (!(p.R > 0.0) || p.N < 2 || p.M < 1) throw BadParams("lqr needs R > 0, N >= 2, M >= 1");
  const auto cx = broadcast(p.cx, p.d, "cx"), cu = broadcast(p.cu, p.d, "cu"), cT = broadcast(p.cT, p.d, "cT");
  for (std::size_t i = 0; i < p.d; ++i) {
    if (!(cu[i] > 0.0) || !(cT[i] > 0.0) || !(cx[i] >= 0.0)) throw BadParams("lqr needs cu, cT > 0 and cx >= 0");
  }
  const RegularGrid X(std::vector<double>(p.d, -p.R), std::vector<double>(p.d, p.R), std::vector<std::size_t>(p.d, p.N));
  const double ur = p.M == 1 ? 0.0 : p.R;
  const RegularGrid U(std::vector<double>(p.d, -ur), std::vector<double>(p.d, ur), std::vector<std::size_t>(p.d, p.M));
  const auto I = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(p.d), static_cast<Eigen::Index>(p.d));
  return stationary_model(MixedSpace::continuous_only(X), MixedSpace::continuous_only(U), I, I, square_cost(cx),
                          square_cost(cu), square_cost(cT), p.T);
}

std::vector<std::vector<double>> lqr_value_coefficients(const LqrParams& p) {
  const auto cx = broadcast(p.cx, p.d, "cx"), cu = broadcast(p.cu, p.d, "cu"), cT = broadcast(p.cT, p.d, "cT");
  std::vector<std::vector<double>> P(p.T + 1, std::vector<double>(p.d));
  P[p.T] = cT;
  // min_u c_u u^2 + P (x + u)^2 = c_u P / (c_u + P) x^2.
  for (std::size_t t = p.T; t-- > 0;)
    for (std::size_t i = 0; i < p.d; ++i) P[t][i] = cx[i] + cu[i] * P[t + 1][i] / (cu[i] + P[t + 1][i]);
  return P;
}

std::vector<std::vector<double>> lqr_policy_gains(const LqrParams& p) {
  const auto cu = broadcast(p.cu, p.d, "cu");
  const auto P = lqr_value_coefficients(p);
  std::vector<std::vector<double>> K(p.T, std::vector<double>(p.d));
  for (std::size_t t = 0; t < p.T; ++t)
    for (std::size_t i = 0; i < p.d; ++i) K[t][i] = P[t + 1][i] / (cu[i] + P[t + 1][i]);
  return K;
}

HardInstance make_hard_instance(const HardInstanceParams& p) {
  const std::size_t n = p.a.size();
  if (n == 0) throw BadParams("hard instance needs at least one random variable");
  for (auto ai : p.a)
    if (ai <= 0) throw BadParams("hard instance supports {0, a_i} need a_i > 0");
  if (p.lambda.num <= 0 || p.lambda.num > p.lambda.den) throw BadParams("lambda must lie in (0, 1]");
  if (!(p.state_spacing > 0.0) || !(p.terminal_multiplier > 0.0)) throw BadParams("spacing and multiplier must be > 0");

  HardInstance h;
  h.n = n;
  h.m = *std::max_element(p.a.begin(), p.a.end());
  const double lam = p.lambda.value();
  const double mn = static_cast<double>(h.m) * static_cast<double>(n);
  h.lambda_bar = std::min(lam, 1.0 - lam);
  // lambda = 1 leaves no overbuying cost; fall back to lambda itself so the
  // regularization stays positive.
  if (h.lambda_bar <= 0.0) h.lambda_bar = lam;
  h.state_spacing = p.state_spacing / std::ldexp(1.0, static_cast<int>(p.refinement));

  if (p.linear) {
    if (p.beta && *p.beta != 0.0) throw BadParams("linear variant has beta = 0");
    h.beta = 0.0;
    h.Ux = p.Ux.value_or(2.0 * mn);
    h.Uu = p.Uu.value_or(2.0 * mn);
    if (h.Ux < mn || h.Uu < mn) throw BadParams("linear variant needs Ux, Uu >= m n");
  } else {
    h.beta = p.beta.value_or(h.lambda_bar / (8.0 * mn * mn));
    if (!(h.beta > 0.0)) throw BadParams("beta must be > 0");
    h.Ux = p.Ux.value_or(std::max(1.0 / h.beta, mn));
    h.Uu = p.Uu.value_or(1.0 / h.beta);
    if (h.Ux < std::max(1.0 / h.beta, mn) * (1 - 1e-12)) throw BadParams("Ux must be >= max(1/beta, m n)");
    if (h.Uu < (1.0 / h.beta) * (1 - 1e-12)) throw BadParams("Uu must be >= 1/beta");
  }
  h.Ux = round_up(h.Ux, h.state_spacing);
  h.Uu = round_up(h.Uu, h.state_spacing);
  h.dual_spacing = (p.linear ? 1.0 / 64.0 : h.beta / 8.0) / std::ldexp(1.0, static_cast<int>(p.refinement));

  const std::size_t T = n + (p.recourse_after_demand ? 3 : 2);
  const RegularGrid X = RegularGrid::line(-h.Ux, h.Ux, points_for(2 * h.Ux, h.state_spacing));
  const RegularGrid U = RegularGrid::line(0.0, h.Uu, points_for(h.Uu, h.state_spacing));

  auto purchase = [&](double unit) {
    QuadraticCost q{{2.0 * h.beta}, {unit}, 0.0, {0.0}, {h.Uu}};
    return CostFn{q};
  };
  const CostFn zero{QuadraticCost::isotropic(1, 0.0)};

  DpModel& m = h.model.model;
  m.state = MixedSpace::continuous_only(X);
  m.action = MixedSpace::continuous_only(U);
  m.gT = QuadraticCost::isotropic(1, 2.0 * p.terminal_multiplier * mn);
  m.stages.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    StageData& st = m.stages[t];
    st.Ap = scalar(1.0);
    st.Bp = scalar(t + 1 == T ? -1.0 : 1.0);
    st.gx = zero;
    if (t == 0)
      st.gu = purchase(1.0 - lam);
    else if (t + 1 == T)
      st.gu = purchase(0.0);
    else
      st.gu = purchase(1.0);
  }
  // noise_at(t) follows stage t: demand Z_t after purchase stage t = 1..n.
  h.model.noise.assign(T, NoiseModel::point_mass(1));
  for (std::size_t t = 1; t <= n; ++t) h.model.noise[t] = two_point(0.0, -static_cast<double>(p.a[t - 1]));
  h.model.validate();
  return h;
}

std::vector<DualPolicy> hard_instance_duals(const HardInstance& h) {
  const std::size_t T = h.model.model.horizon();
  auto line = [&](double lo, double hi) {
    const std::size_t K = points_for(hi - lo, h.dual_spacing);
    if (K > 2e7) throw BadParams("dual grid too large");
    return DualPolicy::fixed(RegularGrid::line(lo, hi, K));
  };
  std::vector<DualPolicy> out;
  out.reserve(T);
  for (std::size_t t = 0; t < T; ++t) out.push_back(t + 1 == T ? line(-4.0, 1.0) : line(-1.5, 0.5));
  return out;
}

double hard_first_action(const HardInstance& h, const StochSolveResult& r) {
  const RegularGrid& X = r.first.value.grid;
  const double i0 = std::round((0.0 - X.lower()[0]) / X.spacing()[0]);
  const std::size_t i = static_cast<std::size_t>(i0);
  if (X.coord(0, i) != 0.0) throw BadParams("x0 = 0 is not a grid point");
  const auto pol = extract_policy_stoch(r.first.duals.grid.point(r.first.s_star[i]), h.model, 0, r.total_bound());
  return pol.u[0];
}

std::vector<std::uint64_t> convolution_counts(std::span<const std::int64_t> a) {
  const std::size_t n = a.size();
  if (n > 24) throw BudgetExceeded("enumeration budget is 2^24 outcomes");
  std::int64_t total = 0;
  for (auto v : a) {
    if (v < 0) throw BadParams("support values must be >= 0");
    total += v;
  }
  const std::size_t outcomes = std::size_t{1} << n;
  const std::size_t chunks = std::max<std::size_t>(1, std::min<std::size_t>(64, outcomes / 4096));
  std::vector<std::vector<std::uint64_t>> part(chunks, std::vector<std::uint64_t>(static_cast<std::size_t>(total) + 1));
  parallel_for(chunks, [&](std::size_t cb, std::size_t ce) {
    for (std::size_t c = cb; c < ce; ++c) {
      const std::size_t lo = outcomes * c / chunks, hi = outcomes * (c + 1) / chunks;
      for (std::size_t mask = lo; mask < hi; ++mask) {
        std::int64_t s = 0;
        for (std::size_t i = 0; i < n; ++i)
          if ((mask >> i) & 1u) s += a[i];
        ++part[c][static_cast<std::size_t>(s)];
      }
    }
  }, 1);
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(total) + 1, 0);
  for (const auto& pc : part)
    for (std::size_t s = 0; s < pc.size(); ++s) counts[s] += pc[s];
  return counts;
}

Rational cdf_convolution_oracle(std::span<const std::int64_t> a, std::int64_t Lambda) {
  const auto counts = convolution_counts(a);
  const std::int64_t outcomes = std::int64_t{1} << a.size();
  if (Lambda < 0) return Rational::make(0, 1);
  std::uint64_t below = 0;
  for (std::size_t s = 0; s < counts.size() && static_cast<std::int64_t>(s) <= Lambda; ++s) below += counts[s];
  return Rational::make(static_cast<std::int64_t>(below), outcomes);
}

std::int64_t newsvendor_oracle(std::span<const std::int64_t> a, const Rational& lambda) {
  if (lambda.num <= 0 || lambda.num > lambda.den) throw BadParams("lambda must lie in (0, 1]");
  const auto counts = convolution_counts(a);
  const __int128 outcomes = static_cast<__int128>(1) << a.size();
  __int128 below = 0;
  for (std::size_t z = 0; z < counts.size(); ++z) {
    below += counts[z];
    // below / 2^n >= num / den
    if (below * lambda.den >= static_cast<__int128>(lambda.num) * outcomes) return static_cast<std::int64_t>(z);
  }
  return static_cast<std::int64_t>(counts.size()) - 1;
}

DpModel make_lower_bound_instance(std::size_t d, std::size_t k, const std::vector<int>& alpha) {
  if (d == 0 || d > 16) throw BadParams("lower-bound instance needs 1 <= d <= 16");
  if (k >= d) throw BadParams("axis k out of range");
  if (alpha.size() != d) throw BadParams("alpha needs d entries");
  for (int v : alpha)
    if (v != 0 && v != 1) throw BadParams("alpha must be a bit vector");
  const RegularGrid X(std::vector<double>(d, 0.0), std::vector<double>(d, 1.0), std::vector<std::size_t>(d, 2));
  const std::size_t na = d == 1 ? 1 : d - 1;
  const RegularGrid U = d == 1 ? RegularGrid::line(0.0, 0.0, 1)
                               : RegularGrid(std::vector<double>(na, 0.0), std::vector<double>(na, 1.0),
                                             std::vector<std::size_t>(na, 2));
  const auto D = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd Ap = Eigen::MatrixXd::Zero(D, D);
  Ap(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = 1.0;
  Eigen::MatrixXd Bp = Eigen::MatrixXd::Zero(D, static_cast<Eigen::Index>(na));
  for (std::size_t i = 0, c = 0; i < d && d > 1; ++i)
    if (i != k) Bp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c++)) = 1.0;

  std::vector<double> J1(X.size());
  std::vector<std::size_t> idx(d);
  for (std::size_t f = 0; f < X.size(); ++f) {
    X.delinearize(f, idx);
    int worst = 0;
    for (std::size_t i = 0; i < d; ++i) worst = std::max(worst, std::abs(static_cast<int>(idx[i]) - alpha[i]));
    J1[f] = worst;
  }
  QuadraticCost gu = QuadraticCost::isotropic(na, 0.0);
  gu.lower.assign(na, 0.0);
  gu.upper.assign(na, d == 1 ? 0.0 : 1.0);
  return stationary_model(MixedSpace::integer_only(X), MixedSpace::integer_only(U), Ap, Bp, QuadraticCost::isotropic(d, 0.0),
                          gu, TabulatedCost{DiscreteFn(X, std::move(J1))}, 1);
}

double lower_bound_value(std::size_t k, const std::vector<int>& alpha, std::span<const double> x) {
  if (k >= alpha.size() || x.size() != alpha.size()) throw BadParams("lower-bound value: dimension mismatch");
  return std::abs(x[k] - alpha[k]);
}

DpModel make_pwl_instance(const PwlParams& p) {
  if (p.knots.size() < 2 || p.values.size() != p.knots.size()) throw BadParams("pwl instance needs >= 2 knots with values");
  double prev = -kInf;
  for (std::size_t j = 0; j + 1 < p.knots.size(); ++j) {
    if (!(p.knots[j + 1] > p.knots[j])) throw BadParams("pwl knots must increase");
    const double slope = (p.values[j + 1] - p.values[j]) / (p.knots[j + 1] - p.knots[j]);
    if (slope < prev - 1e-12 * (1.0 + std::abs(prev))) throw NotConvex("pwl breakpoints are not convex");
    prev = slope;
  }
  if (!(p.rho >= 0.0) || !(p.R > 0.0) || p.N < 2 || p.M < 1 || p.T == 0) throw BadParams("pwl instance: bad geometry");
  const RegularGrid X = RegularGrid::line(-p.R, p.R, p.N);
  const RegularGrid U = p.M == 1 ? RegularGrid::line(0.0, 0.0, 1) : RegularGrid::line(-p.R, p.R, p.M);
  PiecewiseLinearCost gT{{p.knots}, {p.values}, {-p.R}, {p.R}};
  PiecewiseLinearCost gu{{{-p.R, 0.0, p.R}}, {{p.rho * p.R, 0.0, p.rho * p.R}}, {-p.R}, {p.R}};
  return stationary_model(MixedSpace::continuous_only(X), MixedSpace::continuous_only(U), scalar(1.0), scalar(1.0),
                          QuadraticCost::isotropic(1, 0.0), gu, gT, p.T);
}

void to_json(nlohmann::json& j, const Rational& r) { j = to_string(r); }
void from_json(const nlohmann::json& j, Rational& r) {
  if (j.is_number_integer()) {
    r = Rational::make(j.get<std::int64_t>(), 1);
  } else if (j.is_string()) {
    r = parse_rational(j.get<std::string>());
  } else if (j.is_array() && j.size() == 2) {
    r = Rational::make(j[0].get<std::int64_t>(), j[1].get<std::int64_t>());
  } else {
    throw BadParams("rational must be an integer, \"p/q\" or [p, q]");
  }
}

void to_json(nlohmann::json& j, const LqrParams& p) {
  j = {{"d", p.d}, {"T", p.T}, {"cx", p.cx}, {"cu", p.cu}, {"cT", p.cT}, {"R", p.R}, {"N", p.N}, {"M", p.M}};
}
void from_json(const nlohmann::json& j, LqrParams& p) {
  p.d = j.value("d", p.d);
  p.T = j.value("T", p.T);
  p.cx = j.value("cx", p.cx);
  p.cu = j.value("cu", p.cu);
  p.cT = j.value("cT", p.cT);
  p.R = j.value("R", p.R);
  p.N = j.value("N", p.N);
  p.M = j.value("M", p.M);
}

void to_json(nlohmann::json& j, const HardInstanceParams& p) {
  j = {{"a", p.a},
       {"lambda", p.lambda},
       {"terminal_multiplier", p.terminal_multiplier},
       {"state_spacing", p.state_spacing},
       {"refinement", p.refinement},
       {"linear", p.linear},
       {"recourse_after_demand", p.recourse_after_demand}};
  if (p.beta) j["beta"] = *p.beta;
  if (p.Ux) j["Ux"] = *p.Ux;
  if (p.Uu) j["Uu"] = *p.Uu;
}
void from_json(const nlohmann::json& j, HardInstanceParams& p) {
  p.a = j.at("a").get<std::vector<std::int64_t>>();
  if (j.contains("lambda")) p.lambda = j.at("lambda").get<Rational>();
  if (j.contains("beta")) p.beta = j.at("beta").get<double>();
  if (j.contains("Ux")) p.Ux = j.at("Ux").get<double>();
  if (j.contains("Uu")) p.Uu = j.at("Uu").get<double>();
  p.terminal_multiplier = j.value("terminal_multiplier", p.terminal_multiplier);
  p.state_spacing = j.value("state_spacing", p.state_spacing);
  p.refinement = j.value("refinement", p.refinement);
  p.linear = j.value("linear", p.linear);
  p.recourse_after_demand = j.value("recourse_after_demand", p.recourse_after_demand);
}

void to_json(nlohmann::json& j, const PwlParams& p) {
  j = {{"knots", p.knots}, {"values", p.values}, {"rho", p.rho}, {"R", p.R}, {"N", p.N}, {"M", p.M}, {"T", p.T}};
}
void from_json(const nlohmann::json& j, PwlParams& p) {
  p.knots = j.value("knots", p.knots);
  p.values = j.value("values", p.values);
  p.rho = j.value("rho", p.rho);
  p.R = j.value("R", p.R);
  p.N = j.value("N", p.N);
  p.M = j.value("M", p.M);
  p.T = j.value("T", p.T);
}

}  // namespace cdp
