#include "cdp/conditioning.hpp"

#include <algorithm>
#include <cmath>

#include "cdp/errors.hpp"

namespace cdp {

namespace {

struct AxisCurvature {
  double L = 0.0, Lp = -std::numeric_limits<double>::infinity(), mu = std::numeric_limits<double>::infinity();
  bool has_second = false;
};

AxisCurvature axis_curvature(const DiscreteFn& f, std::size_t axis) {
  AxisCurvature out;
  const RegularGrid& g = f.grid;
  const std::size_t n = g.points(axis);
  const double h = g.spacing()[axis];
  if (n < 2 || h == 0.0) return out;
  const std::size_t stride = g.stride(axis);
  const std::size_t block = stride * n;
  for (std::size_t base = 0; base < g.size(); base += block)
    for (std::size_t r = 0; r < stride; ++r) {
      const std::size_t b = base + r;
      double prev = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const double c = (f[b + (i + 1) * stride] - f[b + i * stride]) / (g.coord(axis, i + 1) - g.coord(axis, i));
        out.L = std::max(out.L, std::abs(c));
        if (i > 0) {
          const double s = (c - prev) / h;
          out.Lp = std::max(out.Lp, s);
          out.mu = std::min(out.mu, s);
          out.has_second = true;
        }
        prev = c;
      }
    }
  return out;
}

void check_moduli(const PhiInputs& p) {
  for (double m : {p.Lgx, p.mugx, p.Lgu, p.mugu, p.LJT, p.muJT})
    if (!(m > 0.0)) throw BadModulus("moduli must be positive");
  if (p.t > p.T) throw BadParams("stage index exceeds horizon");
}

double varphi(std::size_t t, std::size_t T, double x, double y, double z) {
  const double r = std::sqrt(x * (x + 4.0 * y));
  const double am = -(x + 2.0 * y - r) / (z * z);
  const double ap = -(x + 2.0 * y + r) / (z * z);
  const double tt = static_cast<double>(t), TT = static_cast<double>(T);
  const double nu1 = std::pow(am, TT) * std::pow(ap, tt) + std::pow(am, tt) * std::pow(ap, TT);
  const double nu2 = std::pow(am, TT) * std::pow(ap, tt) - std::pow(am, tt) * std::pow(ap, TT);
  return (r * z * nu1 + x * (2.0 * y + z) * nu2) / (r * z * nu1 + (x - 2.0 * z) * nu2);
}

double recurse(std::size_t steps, double x, double y, double z) {
  double v = z;
  for (std::size_t k = 0; k < steps; ++k) v = v * y / (v + y) + x;
  return v;
}

}  // namespace

CurvatureReport estimate_curvature(const DiscreteFn& f) {
  CurvatureReport rep;
  double L2 = 0.0;
  double Lp = -std::numeric_limits<double>::infinity(), mu = std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t a = 0; a < f.grid.dim(); ++a) {
    const auto ax = axis_curvature(f, a);
    L2 += ax.L * ax.L;
    if (ax.has_second) {
      any = true;
      Lp = std::max(Lp, ax.Lp);
      mu = std::min(mu, ax.mu);
    }
  }
  if (!any) throw TooFewPoints("curvature estimate needs an axis with at least three points");
  rep.lipschitz = std::sqrt(L2);
  rep.grad_lipschitz = std::max(Lp, 0.0);
  rep.strong_convexity = std::max(mu, 0.0);
  rep.condition_number = mu > 0.0 ? Lp / mu : std::numeric_limits<double>::infinity();
  return rep;
}

std::uint64_t jump_multiplicity(double jump, double ds) {
  if (!(ds > 0.0)) throw BadParams("dual spacing must be positive");
  if (!(jump > 0.0)) return 0;
  const double r = jump / ds;
  return static_cast<std::uint64_t>(std::floor(r * (1.0 + 1e-9)));
}

std::uint64_t w_parameter(const DiscreteFn& f, double ds) {
  const auto c = discrete_gradients(f);
  if (c.size() < 2) throw TooFewPoints("W needs at least three points");
  std::uint64_t w = 0;
  for (std::size_t i = 1; i < c.size(); ++i) w = std::max(w, jump_multiplicity(c[i] - c[i - 1], ds));
  return w;
}

double phi_closed_form(const PhiInputs& p) {
  check_moduli(p);
  return varphi(p.t, p.T, p.Lgx, p.Lgu, p.LJT) / varphi(p.t, p.T, p.mugx, p.mugu, p.muJT);
}

double phi_recursive(const PhiInputs& p) {
  check_moduli(p);
  const std::size_t steps = p.T - p.t;
  return recurse(steps, p.Lgx, p.Lgu, p.LJT) / recurse(steps, p.mugx, p.mugu, p.muJT);
}

GammaReport gamma(const PhiInputs& p) {
  PhiInputs q = p;
  q.t = 0;
  GammaReport g;
  g.closed_form = phi_closed_form(q);
  g.recursive = phi_recursive(q);
  const double rel = std::abs(g.closed_form - g.recursive) / std::max(1.0, std::abs(g.recursive));
  g.disagreement = !(rel <= 1e-6);
  g.value = g.disagreement ? g.recursive : g.closed_form;
  return g;
}

void to_json(nlohmann::json& j, const CurvatureReport& r) {
  j = nlohmann::json{{"lipschitz", r.lipschitz},
                     {"grad_lipschitz", r.grad_lipschitz},
                     {"strong_convexity", r.strong_convexity},
                     {"condition_number", std::isfinite(r.condition_number) ? nlohmann::json(r.condition_number)
                                                                            : nlohmann::json("inf")}};
}

void to_json(nlohmann::json& j, const GammaReport& r) {
  j = nlohmann::json{{"value", r.value},
                     {"closed_form", std::isfinite(r.closed_form) ? nlohmann::json(r.closed_form) : nlohmann::json(nullptr)},
                     {"recursive", r.recursive},
                     {"disagreement", r.disagreement}};
}

}  // namespace cdp
