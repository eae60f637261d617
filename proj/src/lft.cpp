#include "cdp/lft.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>

#include "cdp/errors.hpp"
#include "cdp/parallel.hpp"

namespace cdp {

DiscreteFn::DiscreteFn(RegularGrid g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
  if (values.size() != grid.size()) throw BadParams("function length does not match grid size");
  for (double x : values)
    if (!std::isfinite(x)) throw BadParams("function values must be finite");
}

double DiscreteFn::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

std::vector<double> discrete_gradients(const DiscreteFn& f) {
  if (f.grid.dim() != 1) throw BadParams("discrete_gradients expects a 1-D function");
  const std::size_t n = f.size();
  if (n < 2) throw TooFewPoints("discrete gradients need at least two points");
  std::vector<double> c(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i)
    c[i] = (f[i + 1] - f[i]) / (f.grid.coord(0, i + 1) - f.grid.coord(0, i));
  return c;
}

namespace {

bool nondecreasing_with_tolerance(double prev, double next, double extra = 0.0) {
  return next >= prev - 1e-12 * (1.0 + std::abs(prev)) - extra;
}

// Calls fn(base, stride, n) for every 1-D slice along `axis` in a grid whose
// per-axis extents are `shape`.
template <class Fn>
void for_each_slice(const std::vector<std::size_t>& shape, std::size_t axis, Fn&& fn) {
  std::size_t outer = 1, inner = 1;
  for (std::size_t a = 0; a < axis; ++a) outer *= shape[a];
  for (std::size_t a = axis + 1; a < shape.size(); ++a) inner *= shape[a];
  const std::size_t n = shape[axis];
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t r = 0; r < inner; ++r) fn(o * n * inner + r, inner, n);
}

struct GradientRange {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  bool convex = true;
};

GradientRange axis_gradients(const RegularGrid& g, std::span<const double> y, std::size_t axis,
                             double value_noise = 0.0) {
  GradientRange out;
  const double h = g.spacing()[axis];
  if (g.points(axis) < 2 || h == 0.0) return out;
  const double extra = 4.0 * value_noise / h;
  for_each_slice(g.points_per_axis(), axis, [&](std::size_t base, std::size_t stride, std::size_t n) {
    double prev = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double dx = g.coord(axis, i + 1) - g.coord(axis, i);
      const double c = (y[base + (i + 1) * stride] - y[base + i * stride]) / dx;
      out.lo = std::min(out.lo, c);
      out.hi = std::max(out.hi, c);
      if (i > 0 && !nondecreasing_with_tolerance(prev, c, extra)) out.convex = false;
      prev = c;
    }
  });
  return out;
}

void check_queries(const RegularGrid& primal, const std::vector<std::vector<double>>& queries) {
  if (queries.size() != primal.dim()) throw BadParams("query dimension does not match primal grid");
  for (const auto& q : queries) {
    if (q.empty()) throw BadParams("empty query axis");
    if (!std::is_sorted(q.begin(), q.end())) throw BadParams("query coordinates must be ascending");
  }
}

std::vector<std::vector<double>> axis_coords(const RegularGrid& g) {
  std::vector<std::vector<double>> c(g.dim());
  for (std::size_t a = 0; a < g.dim(); ++a) c[a] = g.axis_coords(a);
  return c;
}

}  // namespace

// One 1-D conjugate pass over a strided slice: out[j] = max_i q_j x_i - y_i,
// ties to the smallest i. When the slice is convex up to rounding the
// maximizer moves monotonically with q; a short local search around the
// pointer absorbs rounding-level non-unimodality so the result is the exact
// (smallest-index) maximum of the computed values.
void scan_slice(const SliceTask& task) {
  const auto xs = task.xs;
  const auto q = task.q;
  const double* y = task.y;
  const std::size_t ystride = task.ystride;
  double* out = task.out;
  std::size_t* arg = task.arg;
  const std::size_t n = xs.size(), m = q.size();
  auto yv = [&](std::size_t i) { return y[i * ystride]; };

  bool monotone = n >= 2 && xs[1] > xs[0];
  double ymax = 0.0, xmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ymax = std::max(ymax, std::abs(yv(i)));
    xmax = std::max(xmax, std::abs(xs[i]));
  }
  if (monotone) {
    // S bounds how far y lies below the convex function whose gradients are
    // the running maxima of the computed ones. Every pairing is then within S
    // of a concave sequence, and the tau windows below (tau > S) cannot stop
    // short of the exact maximum.
    double cmax = -std::numeric_limits<double>::infinity(), S = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double dx = xs[i + 1] - xs[i];
      const double c = (yv(i + 1) - yv(i)) / dx;
      cmax = std::max(cmax, c);
      S += (cmax - c) * dx;
    }
    monotone = S <= 0.5e-10 * ymax;
  }

  if (!monotone) {
    for (std::size_t j = 0; j < m; ++j) {
      std::size_t best = 0;
      double bv = q[j] * xs[0] - yv(0);
      for (std::size_t i = 1; i < n; ++i) {
        const double v = q[j] * xs[i] - yv(i);
        if (v > bv) bv = v, best = i;
      }
      out[j] = bv;
      arg[j] = best;
    }
    return;
  }

  std::size_t p = 0;
  for (std::size_t j = 0; j < m; ++j) {
    const double qj = q[j];
    auto v = [&](std::size_t i) { return qj * xs[i] - yv(i); };
    double vp = v(p);
    while (p + 1 < n) {
      const double vn = v(p + 1);
      if (!(vn > vp)) break;
      ++p;
      vp = vn;
    }
    const double tau = 1e-10 * (std::abs(qj) * xmax + ymax) + std::numeric_limits<double>::min();
    std::size_t best = p;
    double bv = vp;
    for (std::size_t k = p; k-- > 0;) {
      const double vk = v(k);
      if (vk < bv - tau) break;
      if (vk >= bv) bv = vk, best = k;
    }
    for (std::size_t k = p + 1; k < n; ++k) {
      const double vk = v(k);
      if (vk < bv - tau) break;
      if (vk > bv) bv = vk, best = k;
    }
    out[j] = bv;
    arg[j] = best;
    p = best;
  }
}

bool is_axis_convex(const DiscreteFn& f, double value_noise) {
  for (std::size_t a = 0; a < f.grid.dim(); ++a)
    if (!axis_gradients(f.grid, f.values, a, value_noise).convex) return false;
  return true;
}

DualGrid canonical_dual_grid(const DiscreteFn& f, std::size_t K, double value_noise) {
  const auto c = discrete_gradients(f);
  if (K < 2) throw BadParams("canonical dual grid needs K >= 2");
  const double extra = f.size() > 1 ? 4.0 * value_noise / f.grid.spacing()[0] : 0.0;
  for (std::size_t i = 1; i < c.size(); ++i)
    if (!nondecreasing_with_tolerance(c[i - 1], c[i], extra)) throw NotConvex("discrete gradients decrease");
  const double lo = c.front(), hi = std::max(c.front(), c.back());
  return DualGrid{RegularGrid::line(lo, hi, K)};
}

DualGrid bounding_dual_grid(const DiscreteFn& f, std::span<const std::size_t> K) {
  const RegularGrid& g = f.grid;
  if (K.size() != g.dim()) throw BadParams("need one dual point count per axis");
  std::vector<double> lo(g.dim()), hi(g.dim());
  std::vector<std::size_t> n(K.begin(), K.end());
  for (std::size_t a = 0; a < g.dim(); ++a) {
    const auto r = axis_gradients(g, f.values, a);
    if (g.points(a) < 2 || g.spacing()[a] == 0.0) {
      lo[a] = hi[a] = 0.0;
      n[a] = 1;
      continue;
    }
    if (r.hi == r.lo || n[a] == 1) {
      lo[a] = hi[a] = r.lo;
      n[a] = 1;
      continue;
    }
    if (n[a] < 4) throw BadParams("widened dual axis needs at least 4 points");
    const double step = (r.hi - r.lo) / static_cast<double>(n[a] - 3);
    lo[a] = r.lo - step;
    hi[a] = r.hi + step;
  }
  return DualGrid{RegularGrid(std::move(lo), std::move(hi), std::move(n))};
}

double pairing_minus(std::span<const double> q, std::span<const double> x, double y) {
  const std::size_t d = q.size();
  double v = q[d - 1] * x[d - 1] - y;
  for (std::size_t a = d - 1; a-- > 0;) v = q[a] * x[a] + v;
  return v;
}

ConjugateTable conjugate_product_bruteforce(const RegularGrid& primal, std::span<const double> y,
                                            const std::vector<std::vector<double>>& queries) {
  check_queries(primal, queries);
  const std::size_t d = primal.dim(), N = primal.size();
  std::vector<std::size_t> qshape(d);
  std::size_t M = 1;
  for (std::size_t a = 0; a < d; ++a) M *= (qshape[a] = queries[a].size());

  std::vector<double> pts(N * d);
  for (std::size_t i = 0; i < N; ++i) primal.point(i, std::span<double>(pts.data() + i * d, d));

  ConjugateTable out{std::vector<double>(M), std::vector<std::size_t>(M)};
  parallel_for(M, [&](std::size_t b, std::size_t e) {
    std::vector<double> q(d);
    for (std::size_t j = b; j < e; ++j) {
      std::size_t rem = j;
      for (std::size_t a = d; a-- > 0;) {
        q[a] = queries[a][rem % qshape[a]];
        rem /= qshape[a];
      }
      std::size_t best = 0;
      double bv = pairing_minus(q, std::span<const double>(pts.data(), d), y[0]);
      for (std::size_t i = 1; i < N; ++i) {
        const double v = pairing_minus(q, std::span<const double>(pts.data() + i * d, d), y[i]);
        if (v > bv) bv = v, best = i;
      }
      out.values[j] = bv;
      out.argmax[j] = best;
    }
  }, 16);
  return out;
}

ConjugateTable conjugate_product_with(const RegularGrid& primal, std::span<const double> y,
                                      const std::vector<std::vector<double>>& queries, const SliceSolver& solver,
                                      const std::function<void(std::size_t, std::size_t)>& before_pass) {
  check_queries(primal, queries);
  if (y.size() != primal.size()) throw BadParams("value count does not match primal grid");
  const std::size_t d = primal.dim();
  std::vector<std::size_t> shape = primal.points_per_axis();

  // Y holds the "subtracted" operand of the next pass: f for the first pass
  // (read in place), then the negated partial conjugate, so that
  // q x - Y == q x + g exactly. partial is empty while every index is 0.
  std::vector<double> Y;
  std::vector<std::size_t> partial;
  const double* src = y.data();

  for (std::size_t a = d; a-- > 0;) {
    const std::vector<double> xs = primal.axis_coords(a);
    const auto& q = queries[a];
    std::size_t outer = 1, inner = 1;
    for (std::size_t b = 0; b < a; ++b) outer *= shape[b];
    for (std::size_t b = a + 1; b < d; ++b) inner *= shape[b];
    const std::size_t n = shape[a], m = q.size();

    std::vector<double> nextY(outer * m * inner);
    std::vector<std::size_t> nextP(nextY.size());
    const std::size_t stride_a = primal.stride(a);
    if (before_pass) before_pass(a, outer * inner);
    parallel_for(outer * inner, [&](std::size_t b, std::size_t e) {
      // Contiguous output slices are written in place; strided ones go
      // through scratch buffers.
      std::vector<double> vals(inner == 1 ? 0 : m);
      std::vector<std::size_t> args(inner == 1 ? 0 : m);
      for (std::size_t s = b; s < e; ++s) {
        const std::size_t o = s / inner, r = s % inner;
        const std::size_t in_base = o * n * inner + r;
        const std::size_t out_base = o * m * inner + r;
        double* ov = inner == 1 ? nextY.data() + out_base : vals.data();
        std::size_t* oa = inner == 1 ? nextP.data() + out_base : args.data();
        solver(SliceTask{xs, src + in_base, inner, q, ov, oa, a, s});
        for (std::size_t j = 0; j < m; ++j) {
          const std::size_t i = oa[j];
          nextY[out_base + j * inner] = -ov[j];
          nextP[out_base + j * inner] = i * stride_a + (partial.empty() ? 0 : partial[in_base + i * inner]);
        }
      }
    }, 4);
    Y = std::move(nextY);
    partial = std::move(nextP);
    src = Y.data();
    shape[a] = m;
  }
  for (double& v : Y) v = -v;
  return ConjugateTable{std::move(Y), std::move(partial)};
}

ConjugateTable conjugate_product_fast(const RegularGrid& primal, std::span<const double> y,
                                      const std::vector<std::vector<double>>& queries) {
  return conjugate_product_with(primal, y, queries, scan_slice);
}

ConjugateTable conjugate_at_points(const RegularGrid& primal, std::span<const double> y,
                                   std::span<const double> points) {
  const std::size_t d = primal.dim();
  if (points.size() % d != 0) throw BadParams("query point buffer has wrong length");
  const std::size_t M = points.size() / d;
  ConjugateTable out{std::vector<double>(M), std::vector<std::size_t>(M)};
  if (M == 0) return out;
  if (d == 1) {
    std::vector<std::size_t> order(M);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });
    std::vector<double> q(M);
    for (std::size_t k = 0; k < M; ++k) q[k] = points[order[k]];
    auto t = conjugate_product_fast(primal, y, {q});
    for (std::size_t k = 0; k < M; ++k) {
      out.values[order[k]] = t.values[k];
      out.argmax[order[k]] = t.argmax[k];
    }
    return out;
  }
  const std::size_t N = primal.size();
  std::vector<double> pts(N * d);
  for (std::size_t i = 0; i < N; ++i) primal.point(i, std::span<double>(pts.data() + i * d, d));
  parallel_for(M, [&](std::size_t b, std::size_t e) {
    for (std::size_t j = b; j < e; ++j) {
      std::span<const double> q(points.data() + j * d, d);
      std::size_t best = 0;
      double bv = pairing_minus(q, std::span<const double>(pts.data(), d), y[0]);
      for (std::size_t i = 1; i < N; ++i) {
        const double v = pairing_minus(q, std::span<const double>(pts.data() + i * d, d), y[i]);
        if (v > bv) bv = v, best = i;
      }
      out.values[j] = bv;
      out.argmax[j] = best;
    }
  }, 16);
  return out;
}

namespace {
void check_dual_dim(const DiscreteFn& f, const DualGrid& duals) {
  if (duals.grid.dim() != f.grid.dim()) throw BadParams("dual grid dimension does not match primal");
}
}  // namespace

Conjugate dlft_bruteforce(const DiscreteFn& f, const DualGrid& duals) {
  check_dual_dim(f, duals);
  auto t = conjugate_product_bruteforce(f.grid, f.values, axis_coords(duals.grid));
  return Conjugate{DiscreteFn(duals.grid, std::move(t.values)), std::move(t.argmax)};
}

Conjugate dlft_fast(const DiscreteFn& f, const DualGrid& duals) {
  check_dual_dim(f, duals);
  if (!is_axis_convex(f)) throw NotConvex("per-axis discrete gradients are not nondecreasing");
  auto t = conjugate_product_fast(f.grid, f.values, axis_coords(duals.grid));
  return Conjugate{DiscreteFn(duals.grid, std::move(t.values)), std::move(t.argmax)};
}

DiscreteFn biconjugate(const DiscreteFn& f, const DualGrid& duals) {
  check_dual_dim(f, duals);
  auto fs = conjugate_product_fast(f.grid, f.values, axis_coords(duals.grid));
  auto back = conjugate_product_fast(duals.grid, fs.values, axis_coords(f.grid));
  return DiscreteFn(f.grid, std::move(back.values));
}

double lft_perturbation_gap(const DiscreteFn& f, const DiscreteFn& g, const DualGrid& duals) {
  if (!(f.grid == g.grid)) throw BadParams("perturbation gap needs functions on the same grid");
  check_dual_dim(f, duals);
  const auto q = axis_coords(duals.grid);
  const auto a = conjugate_product_fast(f.grid, f.values, q);
  const auto b = conjugate_product_fast(g.grid, g.values, q);
  double gap = 0.0;
  for (std::size_t j = 0; j < a.values.size(); ++j) gap = std::max(gap, std::abs(a.values[j] - b.values[j]));
  return gap;
}

double clft_quadratic(double a, std::span<const double> b, double c, std::span<const double> lower,
                      std::span<const double> upper, std::span<const double> s) {
  if (a < 0.0) throw BadParams("quadratic coefficient must be nonnegative");
  const std::size_t n = s.size();
  if (b.size() != n || lower.size() != n || upper.size() != n) throw BadParams("quadratic dimension mismatch");
  double total = -c;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = s[i] - b[i];
    double u;
    if (a > 0.0) {
      u = std::clamp(t / a, lower[i], upper[i]);
    } else if (t > 0.0) {
      if (!std::isfinite(upper[i])) throw Unbounded("linear cost over an unbounded box");
      u = upper[i];
    } else if (t < 0.0) {
      if (!std::isfinite(lower[i])) throw Unbounded("linear cost over an unbounded box");
      u = lower[i];
    } else {
      continue;
    }
    total += t * u - 0.5 * a * u * u;
  }
  return total;
}

void to_json(nlohmann::json& j, const DiscreteFn& f) { j = nlohmann::json{{"grid", f.grid}, {"values", f.values}}; }

void from_json(const nlohmann::json& j, DiscreteFn& f) {
  f = DiscreteFn(j.at("grid").get<RegularGrid>(), j.at("values").get<std::vector<double>>());
}

void write_csv(std::ostream& os, const DiscreteFn& f) {
  const std::size_t d = f.grid.dim();
  os << "flat_index";
  for (std::size_t a = 0; a < d; ++a) os << ",x" << a;
  os << ",value\n";
  os << std::setprecision(17);
  std::vector<double> x(d);
  for (std::size_t i = 0; i < f.size(); ++i) {
    f.grid.point(i, x);
    os << i;
    for (double v : x) os << ',' << v;
    os << ',' << f[i] << '\n';
  }
}

}  // namespace cdp
