#include "cdp/cost.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cdp/errors.hpp"

namespace cdp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void check_quadratic(const QuadraticCost& q) {
  const std::size_t n = q.a.size();
  if (q.b.size() != n || q.lower.size() != n || q.upper.size() != n)
    throw BadParams("quadratic cost: a, b, lower, upper lengths differ");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(q.a[i] >= 0.0) || !std::isfinite(q.a[i])) throw BadParams("quadratic cost: a must be finite and >= 0");
    if (q.lower[i] > q.upper[i]) throw BadParams("quadratic cost: empty box");
  }
}

void check_pwl(const PiecewiseLinearCost& p) {
  const std::size_t n = p.knots.size();
  if (p.values.size() != n || p.lower.size() != n || p.upper.size() != n)
    throw BadParams("piecewise-linear cost: lengths differ");
  for (std::size_t i = 0; i < n; ++i) {
    const auto& k = p.knots[i];
    const auto& v = p.values[i];
    if (k.size() < 2 || v.size() != k.size()) throw BadParams("piecewise-linear cost needs >= 2 knots per coordinate");
    double prev = -kInf;
    for (std::size_t j = 0; j + 1 < k.size(); ++j) {
      if (!(k[j + 1] > k[j])) throw BadParams("piecewise-linear knots must increase");
      const double slope = (v[j + 1] - v[j]) / (k[j + 1] - k[j]);
      if (slope < prev - 1e-12 * (1.0 + std::abs(prev))) throw NotConvex("piecewise-linear slopes decrease");
      prev = slope;
    }
    if (!std::isfinite(p.lower[i]) || !std::isfinite(p.upper[i]) || p.lower[i] > p.upper[i])
      throw BadParams("piecewise-linear cost needs a finite box");
  }
}

double pwl_eval(const std::vector<double>& k, const std::vector<double>& v, double x) {
  const std::size_t m = k.size();
  std::size_t j;
  if (x <= k.front()) {
    j = 0;
  } else if (x >= k.back()) {
    j = m - 2;
  } else {
    j = static_cast<std::size_t>(std::upper_bound(k.begin(), k.end(), x) - k.begin()) - 1;
    j = std::min(j, m - 2);
  }
  const double slope = (v[j + 1] - v[j]) / (k[j + 1] - k[j]);
  return v[j] + slope * (x - k[j]);
}

// argmax over candidate points of s u - g(u); ties go to the smallest u.
template <class G>
void best_of(const std::vector<double>& cand, double s, G&& g, double& bu, double& bv) {
  bv = -kInf;
  bu = 0.0;
  for (double u : cand) {
    const double v = s * u - g(u);
    if (v > bv || (v == bv && u < bu)) bv = v, bu = u;
  }
}

void quadratic_coordinate(double a, double b, double lo, double hi, double s, bool integer, double& u, double& val) {
  const double t = s - b;
  if (integer) {
    lo = std::ceil(lo);
    hi = std::floor(hi);
    if (lo > hi) throw BadParams("quadratic cost: no integer point in box");
  }
  if (a > 0.0) {
    const double uc = std::clamp(t / a, lo, hi);
    if (!integer) {
      u = uc;
    } else {
      const double f = std::floor(uc), c = std::ceil(uc);
      const double vf = t * f - 0.5 * a * f * f, vc = t * c - 0.5 * a * c * c;
      u = vc > vf ? c : f;
    }
  } else if (t > 0.0) {
    if (!std::isfinite(hi)) throw Unbounded("linear cost over an unbounded box");
    u = hi;
  } else if (t < 0.0) {
    if (!std::isfinite(lo)) throw Unbounded("linear cost over an unbounded box");
    u = lo;
  } else {
    u = std::clamp(0.0, lo, hi);
  }
  val = t * u - 0.5 * a * u * u;
}

}  // namespace

QuadraticCost QuadraticCost::isotropic(std::size_t dim, double a, double b, double c) {
  return QuadraticCost{std::vector<double>(dim, a), std::vector<double>(dim, b), c, std::vector<double>(dim, -kInf),
                       std::vector<double>(dim, kInf)};
}

std::size_t cost_dim(const CostFn& g) {
  return std::visit(overloaded{[](const QuadraticCost& q) { return q.a.size(); },
                               [](const PiecewiseLinearCost& p) { return p.knots.size(); },
                               [](const TabulatedCost& t) { return t.fn.grid.dim(); },
                               [](const FunctionCost& f) { return f.dim; }},
                    g);
}

double evaluate(const CostFn& g, std::span<const double> u) {
  if (u.size() != cost_dim(g)) throw BadParams("cost evaluated at a point of the wrong dimension");
  return std::visit(overloaded{[&](const QuadraticCost& q) {
                                 double s = q.c;
                                 for (std::size_t i = 0; i < u.size(); ++i)
                                   s += 0.5 * q.a[i] * u[i] * u[i] + q.b[i] * u[i];
                                 return s;
                               },
                               [&](const PiecewiseLinearCost& p) {
                                 double s = 0.0;
                                 for (std::size_t i = 0; i < u.size(); ++i) s += pwl_eval(p.knots[i], p.values[i], u[i]);
                                 return s;
                               },
                               [&](const TabulatedCost& t) {
                                 double excess = 0.0;
                                 return interpolate(t.fn, u, excess);
                               },
                               [&](const FunctionCost& f) { return f.f(u); }},
                    g);
}

CostConjugate cost_conjugate(const CostFn& g, std::span<const double> s, std::size_t first_integer) {
  const std::size_t n = cost_dim(g);
  if (s.size() != n) throw BadParams("slope has the wrong dimension for this cost");
  CostConjugate out;
  out.argmax.assign(n, 0.0);
  std::visit(overloaded{[&](const QuadraticCost& q) {
                          check_quadratic(q);
                          double total = -q.c;
                          for (std::size_t i = 0; i < n; ++i) {
                            double u, v;
                            quadratic_coordinate(q.a[i], q.b[i], q.lower[i], q.upper[i], s[i], i >= first_integer, u, v);
                            out.argmax[i] = u;
                            total += v;
                          }
                          out.value = total;
                        },
                        [&](const PiecewiseLinearCost& p) {
                          check_pwl(p);
                          double total = 0.0;
                          for (std::size_t i = 0; i < n; ++i) {
                            const bool integer = i >= first_integer;
                            const double lo = integer ? std::ceil(p.lower[i]) : p.lower[i];
                            const double hi = integer ? std::floor(p.upper[i]) : p.upper[i];
                            if (lo > hi) throw BadParams("piecewise-linear cost: no integer point in box");
                            std::vector<double> cand{lo, hi};
                            for (double k : p.knots[i]) {
                              if (k <= lo || k >= hi) continue;
                              if (integer) {
                                cand.push_back(std::floor(k));
                                cand.push_back(std::ceil(k));
                              } else {
                                cand.push_back(k);
                              }
                            }
                            double u, v;
                            best_of(cand, s[i], [&](double x) { return pwl_eval(p.knots[i], p.values[i], x); }, u, v);
                            out.argmax[i] = u;
                            total += v;
                          }
                          out.value = total;
                        },
                        [&](const TabulatedCost& t) {
                          const auto r = conjugate_at_points(t.fn.grid, t.fn.values, s);
                          out.value = r.values[0];
                          t.fn.grid.point(r.argmax[0], out.argmax);
                        },
                        [&](const FunctionCost&) -> void { throw NoConjugate("cost has no conjugate"); }},
             g);
  return out;
}

double strong_convexity(const CostFn& g) {
  if (const auto* q = std::get_if<QuadraticCost>(&g)) {
    if (q->a.empty()) return 0.0;
    return *std::min_element(q->a.begin(), q->a.end());
  }
  return 0.0;
}

std::vector<double> conjugate_argmax_bound(const CostFn& g, std::span<const double> slo, std::span<const double> shi,
                                           std::size_t first_integer) {
  const std::size_t n = cost_dim(g);
  std::vector<double> out(n, kInf);
  std::visit(overloaded{[&](const QuadraticCost& q) {
                          for (std::size_t i = 0; i < n; ++i) {
                            const bool integer = i >= first_integer;
                            double lo = q.lower[i], hi = q.upper[i];
                            if (integer) lo = std::ceil(lo), hi = std::floor(hi);
                            if (q.a[i] > 0.0) {
                              double ulo = std::clamp((slo[i] - q.b[i]) / q.a[i], lo, hi);
                              double uhi = std::clamp((shi[i] - q.b[i]) / q.a[i], lo, hi);
                              if (integer) ulo = std::floor(ulo), uhi = std::ceil(uhi);
                              out[i] = std::max(std::abs(ulo), std::abs(uhi));
                            } else {
                              out[i] = std::max(std::abs(lo), std::abs(hi));
                            }
                          }
                        },
                        [&](const PiecewiseLinearCost& p) {
                          for (std::size_t i = 0; i < n; ++i) out[i] = std::max(std::abs(p.lower[i]), std::abs(p.upper[i]));
                        },
                        [&](const TabulatedCost& t) {
                          for (std::size_t i = 0; i < n; ++i)
                            out[i] = std::max(std::abs(t.fn.grid.lower()[i]), std::abs(t.fn.grid.upper()[i]));
                        },
                        [&](const FunctionCost&) {}},
             g);
  return out;
}

DiscreteFn tabulate(const CostFn& g, const RegularGrid& grid) {
  std::vector<double> v(grid.size());
  std::vector<double> x(grid.dim());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid.point(i, x);
    v[i] = evaluate(g, x);
  }
  return DiscreteFn(grid, std::move(v));
}

double interpolate(const DiscreteFn& f, std::span<const double> x, double& excess) {
  const RegularGrid& g = f.grid;
  const std::size_t d = g.dim();
  if (x.size() != d) throw BadParams("interpolation point has the wrong dimension");
  // Per axis: base index and weight of the upper neighbour.
  std::size_t base[16];
  double w[16];
  if (d > 16) throw BadParams("interpolation supports at most 16 axes");
  double ex2 = 0.0;
  for (std::size_t a = 0; a < d; ++a) {
    const double lo = g.lower()[a], hi = g.upper()[a];
    const double xc = std::clamp(x[a], lo, hi);
    ex2 += (x[a] - xc) * (x[a] - xc);
    const std::size_t n = g.points(a);
    if (n == 1 || g.spacing()[a] == 0.0) {
      base[a] = 0;
      w[a] = 0.0;
      continue;
    }
    const double t = (xc - lo) / g.spacing()[a];
    std::size_t i = static_cast<std::size_t>(std::floor(t));
    if (i > n - 2) i = n - 2;
    base[a] = i;
    w[a] = std::clamp(t - static_cast<double>(i), 0.0, 1.0);
  }
  excess = std::sqrt(ex2);
  // Axes sitting exactly on a grid line contribute a factor of 1; only the
  // fractional axes span corners.
  std::size_t active[16];
  std::size_t na = 0, flat0 = 0;
  for (std::size_t a = 0; a < d; ++a) {
    if (w[a] == 1.0) {
      ++base[a];
      w[a] = 0.0;
    }
    flat0 += base[a] * g.stride(a);
    if (w[a] != 0.0) active[na++] = a;
  }
  double acc = 0.0;
  const std::size_t corners = std::size_t{1} << na;
  for (std::size_t c = 0; c < corners; ++c) {
    double weight = 1.0;
    std::size_t flat = flat0;
    for (std::size_t k = 0; k < na; ++k) {
      const std::size_t a = active[k];
      const bool up = (c >> k) & 1u;
      const double wa = up ? w[a] : 1.0 - w[a];
      if (wa == 0.0) {
        weight = 0.0;
        break;
      }
      weight *= wa;
      if (up) flat += g.stride(a);
    }
    if (weight != 0.0) acc += weight * f.values[flat];
  }
  return acc;
}

namespace {

nlohmann::json bound_to_json(double v) {
  if (std::isinf(v)) return nullptr;
  return v;
}

std::vector<double> bounds_from_json(const nlohmann::json& j, std::size_t n, double fallback) {
  std::vector<double> out(n, fallback);
  if (j.is_null()) return out;
  if (!j.is_array() || j.size() != n) throw BadParams("cost json: bound array has the wrong length");
  for (std::size_t i = 0; i < n; ++i) {
    if (j[i].is_null()) continue;
    if (j[i].is_string()) {
      const auto s = j[i].get<std::string>();
      if (s == "inf") out[i] = kInf;
      else if (s == "-inf") out[i] = -kInf;
      else throw BadParams("cost json: unrecognised bound '" + s + "'");
    } else {
      out[i] = j[i].get<double>();
    }
  }
  return out;
}

std::vector<double> vec_or_scalar(const nlohmann::json& j, std::size_t n) {
  if (j.is_array()) {
    auto v = j.get<std::vector<double>>();
    if (v.size() != n) throw BadParams("cost json: coefficient array has the wrong length");
    return v;
  }
  return std::vector<double>(n, j.get<double>());
}

}  // namespace

void to_json(nlohmann::json& j, const CostFn& g) {
  std::visit(overloaded{[&](const QuadraticCost& q) {
                          nlohmann::json lo = nlohmann::json::array(), hi = nlohmann::json::array();
                          for (double v : q.lower) lo.push_back(bound_to_json(v));
                          for (double v : q.upper) hi.push_back(bound_to_json(v));
                          j = {{"kind", "quadratic"}, {"a", q.a}, {"b", q.b}, {"c", q.c}, {"lower", lo}, {"upper", hi}};
                        },
                        [&](const PiecewiseLinearCost& p) {
                          j = {{"kind", "piecewise_linear"},
                               {"knots", p.knots},
                               {"values", p.values},
                               {"lower", p.lower},
                               {"upper", p.upper}};
                        },
                        [&](const TabulatedCost& t) {
                          j = {{"kind", "tabulated"}, {"grid", t.fn.grid}, {"values", t.fn.values}};
                        },
                        [&](const FunctionCost&) -> void { throw BadParams("function costs cannot be serialized"); }},
             g);
}

void from_json(const nlohmann::json& j, CostFn& g) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "quadratic") {
    std::size_t n = 0;
    if (j.contains("dim")) n = j.at("dim").get<std::size_t>();
    else if (j.at("a").is_array()) n = j.at("a").size();
    else throw BadParams("quadratic cost json: scalar coefficients need 'dim'");
    QuadraticCost q;
    q.a = vec_or_scalar(j.at("a"), n);
    q.b = j.contains("b") ? vec_or_scalar(j.at("b"), n) : std::vector<double>(n, 0.0);
    q.c = j.value("c", 0.0);
    q.lower = bounds_from_json(j.value("lower", nlohmann::json()), n, -kInf);
    q.upper = bounds_from_json(j.value("upper", nlohmann::json()), n, kInf);
    check_quadratic(q);
    g = std::move(q);
  } else if (kind == "piecewise_linear") {
    PiecewiseLinearCost p;
    p.knots = j.at("knots").get<std::vector<std::vector<double>>>();
    p.values = j.at("values").get<std::vector<std::vector<double>>>();
    const std::size_t n = p.knots.size();
    p.lower.resize(n);
    p.upper.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (p.knots[i].empty()) throw BadParams("piecewise-linear cost json: empty knot list");
      p.lower[i] = p.knots[i].front();
      p.upper[i] = p.knots[i].back();
    }
    if (j.contains("lower")) p.lower = j.at("lower").get<std::vector<double>>();
    if (j.contains("upper")) p.upper = j.at("upper").get<std::vector<double>>();
    check_pwl(p);
    g = std::move(p);
  } else if (kind == "tabulated") {
    g = TabulatedCost{DiscreteFn(j.at("grid").get<RegularGrid>(), j.at("values").get<std::vector<double>>())};
  } else {
    throw BadParams("unknown cost kind '" + kind + "'");
  }
}

}  // namespace cdp
