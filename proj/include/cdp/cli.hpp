#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cdp::cli {

/// Exit statuses of run().
enum Exit : int { kOk = 0, kError = 1, kViolation = 2 };

/// Parsed builtin instance "name:key=val,key=val". List values separate their
/// entries with ';' (for example "hard:a=1;2;3,lambda=1/2").
struct InstanceSpec {
  std::string name;
  std::map<std::string, std::string> params;
};

InstanceSpec parse_instance_spec(const std::string& s);

struct RunConfig {
  std::string command;              // solve, solve-stoch, simulate, bench, oracle
  std::string oracle_kind;          // newsvendor or cdf, for command == "oracle"
  std::string model_path;           // --model
  std::string instance;             // --instance
  std::optional<double> epsilon;    // resizes continuous state axes and duals when set
  std::optional<std::size_t> horizon;
  std::string out;                  // empty writes to the output stream
  std::string format = "csv";       // csv or json
  bool oracle = false;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string save_model;           // writes the model JSON when non-empty
  std::vector<std::int64_t> a;      // oracle: outcome sizes
  std::string lambda;               // oracle newsvendor: critical ratio
  std::optional<std::int64_t> Lambda;  // oracle cdf: threshold
  std::vector<std::size_t> sizes;   // bench: state grid intervals per row

  /// Throws BadParams on an unknown command, a bad format, epsilon <= 0 or a
  /// missing model source.
  void validate() const;
};

/// Runs one command. Reports go to config.out (or `out`), diagnostics to
/// `err`. Returns kError on any exception, kViolation when the run finished
/// but raised feasibility or simulator flags, kOk otherwise.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Parses argv with the documented flags and calls run().
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cdp::cli
