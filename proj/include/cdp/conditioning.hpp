#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>

#include "cdp/lft.hpp"
#include "json.hpp"

namespace cdp {

/// Discrete curvature surrogates of a tabulated function.
struct CurvatureReport {
  double lipschitz = 0.0;       // L
  double grad_lipschitz = 0.0;  // L'
  double strong_convexity = 0.0;  // mu
  double condition_number = std::numeric_limits<double>::infinity();  // L'/mu
};

/// L = max|c_i|, L' = max second difference / spacing, mu = min of the same,
/// kappa = L'/mu (infinite when mu <= 0). In d > 1 the per-axis values are
/// combined as L = sqrt(sum_a L_a^2), L' = max_a, mu = min_a over axes with at
/// least three points.
CurvatureReport estimate_curvature(const DiscreteFn& f);

/// floor(jump / ds) with a relative slack of 1e-9 so exact multiples are not
/// lost to rounding.
std::uint64_t jump_multiplicity(double jump, double ds);

/// W = floor(max_{i=1..N-2} (c_i - c_{i-1}) / ds) for a 1-D function.
std::uint64_t w_parameter(const DiscreteFn& f, double ds);

struct PhiInputs {
  std::size_t t = 0, T = 0;
  double Lgx = 1, mugx = 1;
  double Lgu = 1, mugu = 1;
  double LJT = 1, muJT = 1;
};

/// The explicit bound on kappa(J'_t) built from alpha_{+-} and nu_{1,2},
/// transcribed literally.
double phi_closed_form(const PhiInputs& p);

/// The same bound obtained by iterating
///   L <- L y / (L + y) + x  (and likewise for mu)
/// from the terminal moduli T - t times.
double phi_recursive(const PhiInputs& p);

struct GammaReport {
  double value = 1.0;
  double closed_form = 1.0;
  double recursive = 1.0;
  /// Set when the closed form and the recursion differ by more than 1e-6
  /// relative; value then holds the recursion.
  bool disagreement = false;
};

/// gamma = phi(0, T, ...). p.t is ignored.
GammaReport gamma(const PhiInputs& p);

void to_json(nlohmann::json& j, const CurvatureReport& r);
void to_json(nlohmann::json& j, const GammaReport& r);

}  // namespace cdp
