#pragma once

// Shared generators and naive reference computations for the unit tests.
// Nothing here calls into the library's transform kernels.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <vector>

#include "cdp/grid.hpp"
#include "cdp/lft.hpp"

namespace cdp::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
inline std::size_t uniform_int(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// max_x <s,x> - f(x), summing the pairing in ascending axis order.
inline double naive_conjugate(const DiscreteFn& f, const std::vector<double>& s) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto x = f.grid.point(i);
    double dot = 0.0;
    for (std::size_t a = 0; a < s.size(); ++a) dot += s[a] * x[a];
    best = std::max(best, dot - f[i]);
  }
  return best;
}

inline std::vector<double> naive_conjugate_all(const DiscreteFn& f, const RegularGrid& duals) {
  std::vector<double> out(duals.size());
  for (std::size_t j = 0; j < duals.size(); ++j) out[j] = naive_conjugate(f, duals.point(j));
  return out;
}

// 1-D convex function with random real gradient jumps in [jlo, jhi].
inline DiscreteFn random_convex_1d(Rng& rng, std::size_t n, double jlo = 1.0, double jhi = 2.0) {
  const double lo = uniform(rng, -5.0, 0.0);
  const double hi = lo + uniform(rng, 1.0, 10.0);
  RegularGrid g = RegularGrid::line(lo, hi, n);
  std::vector<double> v(n);
  v[0] = uniform(rng, -3.0, 3.0);
  double c = uniform(rng, -20.0, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    v[i] = v[i - 1] + c * (g.coord(0, i) - g.coord(0, i - 1));
    c += uniform(rng, jlo, jhi);
  }
  return DiscreteFn(std::move(g), std::move(v));
}

// Integer-valued convex sequence on {0..n-1} with integer gradient jumps.
inline std::vector<long> random_integer_convex(Rng& rng, std::size_t n, long max_jump) {
  std::vector<long> v(n);
  long c = -static_cast<long>(uniform_int(rng, 0, static_cast<std::size_t>(max_jump) * n / 2));
  v[0] = static_cast<long>(uniform_int(rng, 0, 10));
  for (std::size_t i = 1; i < n; ++i) {
    v[i] = v[i - 1] + c;
    c += static_cast<long>(uniform_int(rng, 0, static_cast<std::size_t>(max_jump)));
  }
  return v;
}

// Sum_a f_a(x_a) + g(sum_a x_a) on an integer lattice {0..n_a-1}^d (scaled by
// spacing h and value scale alpha). Every axis slice is convex and the
// function has integral subgradients before scaling.
struct LatticeInstance {
  DiscreteFn f;
  double dual_spacing;
};

inline LatticeInstance random_lattice(Rng& rng, const std::vector<std::size_t>& n, double h, double alpha) {
  const std::size_t d = n.size();
  std::vector<std::vector<long>> fa(d);
  std::size_t total = 0;
  for (std::size_t a = 0; a < d; ++a) {
    fa[a] = random_integer_convex(rng, n[a], 2);
    total += n[a] - 1;
  }
  const auto gs = random_integer_convex(rng, total + 1, 2);
  std::vector<double> lo(d, 0.0), hi(d);
  for (std::size_t a = 0; a < d; ++a) hi[a] = h * static_cast<double>(n[a] - 1);
  RegularGrid grid(lo, hi, n);
  std::vector<double> v(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto m = grid.delinearize(i);
    long s = 0, sum = 0;
    for (std::size_t a = 0; a < d; ++a) {
      s += fa[a][m[a]];
      sum += static_cast<long>(m[a]);
    }
    v[i] = alpha * static_cast<double>(s + gs[static_cast<std::size_t>(sum)]);
  }
  return {DiscreteFn(std::move(grid), std::move(v)), alpha / h};
}

// Separable sum of random 1-D convex functions on a random box.
inline DiscreteFn random_separable(Rng& rng, const std::vector<std::size_t>& n, double jlo = 1.0, double jhi = 2.0) {
  const std::size_t d = n.size();
  std::vector<DiscreteFn> parts;
  std::vector<double> lo(d), hi(d);
  for (std::size_t a = 0; a < d; ++a) {
    parts.push_back(random_convex_1d(rng, n[a], jlo, jhi));
    lo[a] = parts[a].grid.lower()[0];
    hi[a] = parts[a].grid.upper()[0];
  }
  RegularGrid grid(lo, hi, n);
  std::vector<double> v(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto m = grid.delinearize(i);
    double s = 0.0;
    for (std::size_t a = 0; a < d; ++a) s += parts[a][m[a]];
    v[i] = s;
  }
  return DiscreteFn(std::move(grid), std::move(v));
}

// Positive semidefinite quadratic form x^T Q x + <b,x> on a random box.
inline DiscreteFn random_psd_quadratic(Rng& rng, const std::vector<std::size_t>& n) {
  const std::size_t d = n.size();
  std::vector<std::vector<double>> M(d, std::vector<double>(d));
  for (auto& row : M)
    for (double& x : row) x = uniform(rng, -1.0, 1.0);
  std::vector<double> b(d), lo(d), hi(d);
  for (std::size_t a = 0; a < d; ++a) {
    b[a] = uniform(rng, -2.0, 2.0);
    lo[a] = uniform(rng, -3.0, 0.0);
    hi[a] = lo[a] + uniform(rng, 1.0, 4.0);
  }
  RegularGrid grid(lo, hi, n);
  std::vector<double> v(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto x = grid.point(i);
    double s = 0.0;
    for (std::size_t r = 0; r < d; ++r) {
      double mx = 0.0;
      for (std::size_t c = 0; c < d; ++c) mx += M[r][c] * x[c];
      s += mx * mx;
    }
    for (std::size_t a = 0; a < d; ++a) s += b[a] * x[a];
    v[i] = s;
  }
  return DiscreteFn(std::move(grid), std::move(v));
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace cdp::testing
