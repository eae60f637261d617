#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cdp/dp_stoch.hpp"
#include "cdp/lft.hpp"
#include "json.hpp"

namespace cdp {

/// One member (i, m) of the good set with its dual label j; j == npos when the
/// label falls outside the dual grid. in_interval is set when s_j lies in the
/// member's subgradient interval (c_{i-1}, c_i] (endpoints: below c_0 or above
/// c_{N-2}), i.e. when x_i really maximizes the pairing at s_j.
struct GoodPair {
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t i = 0, m = 0, j = npos;
  bool in_interval = false;
};

struct GoodSet {
  std::vector<GoodPair> pairs;  // endpoints and interior members in i order
  std::uint64_t W = 0;
  double ds = 0.0;              // dual spacing used for the multiplicities
  std::size_t dropped = 0;      // members whose label is out of range
};

/// Enumerates {(i, m): m < floor((c_i - c_{i-1}) / ds), 0 < i < N-1} plus the
/// endpoints (0, 0) -> 0 and (N-1, 0) -> K-1, labelling interior members with
/// j = min{l : c_{i-1} < s_l} + m. Throws NotConvex on non-convex input.
GoodSet qlft_good_set(const DiscreteFn& f, const DualGrid& duals);

struct Mismatch {
  std::size_t i = 0, m = 0, j = 0;
};

struct QlftDiagnostics {
  std::size_t relabel_mismatches = 0;  // relabelled point not a maximizer beyond rounding
  std::size_t value_mismatches = 0;    // output differs bitwise from the classical kernel
  std::size_t uncovered = 0;           // duals no member labels
  std::size_t dropped = 0;             // members labelled outside the dual grid
  std::size_t out_of_interval = 0;     // labels outside the member's subgradient interval, discarded
  std::size_t duplicates = 0;          // labels claimed by more than one interior member
  std::size_t nonconvex_slices = 0;
  std::vector<Mismatch> offending;     // first few relabel mismatches

  void merge(const QlftDiagnostics& o);
  bool clean() const { return relabel_mismatches == 0 && value_mismatches == 0; }
};

/// Simulates the measurement on one slice: postselect the good set, relabel
/// each member to its dual, evaluate the pairing at the relabelled point
/// (settling rounding ties among its neighbours), and fill duals no member
/// reaches by a scan between the nearest labelled neighbours. Labels outside
/// the member's subgradient interval are discarded and counted. ref_out/ref_arg
/// give the classical answer for the diagnostics. Returns the enumerated good
/// count and W of the slice.
struct SliceSim {
  std::uint64_t good = 0;
  std::uint64_t W = 0;
  QlftDiagnostics diag;
};
SliceSim simulate_slice(const SliceTask& task, const double* ref_out, const std::size_t* ref_arg);

struct QlftResult {
  Conjugate conjugate;
  double prob = 1.0;
  std::uint64_t good = 0, total = 0;
  std::uint64_t W = 0;
  QlftDiagnostics diag;
};

/// 1-D simulation with diagnostics against dlft_bruteforce. prob =
/// good / (N W), or 1 when W = 0.
QlftResult simulate_qlft(const DiscreteFn& f, const DualGrid& duals);

struct SimPass {
  std::size_t axis = 0, slices = 0, points = 0;  // points per slice
  std::uint64_t good = 0, W = 0;
  double prob = 1.0;  // good / (slices * points * W), 1 when W = 0
};

struct SimStage {
  std::size_t index = 0;
  std::string kind;  // "forward" or "back"
  std::vector<SimPass> passes;
  std::uint64_t good = 0, total = 0;
  double prob = 1.0;         // product over passes
  double kappa_bound = 0.0;  // 1 / kappa estimate of the transform input (0 when unavailable)
  QlftDiagnostics diag;
};

struct SimTrace {
  std::vector<SimStage> stages;
  double overall_prob = 1.0;
  double expected_amp_rounds = 1.0;
  std::optional<double> gamma;
  std::optional<double> gamma_power_bound;  // gamma^{dT}, gamma^{drT} with noise
  QlftDiagnostics diag;
};

struct QdpResult {
  DiscreteFn value;  // J_0
  SimTrace trace;
};

/// Runs the conjugate DP with every transform pass simulated. Requires
/// diagonal A' at every stage.
QdpResult simulate_qdp(const DpModel& m, const std::vector<DualPolicy>& policies);
QdpResult simulate_qdp(const StochModel& m, const std::vector<DualPolicy>& policies);

/// ceil(sqrt(N) / sqrt(overall_prob)).
std::uint64_t point_query_cost(const SimTrace& trace, std::size_t N);

/// gamma from the quadratic moduli of g_x, g_u (stage 0) and g_T; absent when
/// any cost is not quadratic or has a zero modulus.
std::optional<double> model_gamma(const DpModel& m);

void to_json(nlohmann::json& j, const QlftDiagnostics& d);
void to_json(nlohmann::json& j, const SimTrace& t);
/// Columns: stage kind good total prob bound.
void write_trace_table(std::ostream& os, const SimTrace& t);

}  // namespace cdp
