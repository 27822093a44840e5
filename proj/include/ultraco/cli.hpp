#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace ultraco::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;    // refuted, failed check, no convergence
inline constexpr int kExitMalformed = 2; // parse failure, size limit, usage

/// Everything one invocation needs. All randomness derives from `seed`
/// (schedule s of a campaign uses seed + s).
struct RunConfig {
  std::vector<std::string> command; // e.g. {"routing", "solve"}
  std::string instance_path;
  std::string mode = "sync";
  std::uint64_t seed = 1;
  std::size_t horizon = 200;
  std::size_t max_staleness = 5;
  std::size_t fairness_window = 8;
  double activation_prob = 0.5;
  std::string granularity = "per-node";
  std::size_t schedules = 100;
  std::string schedule_path;
  std::string start;
  bool force = false;
  std::string trace_path;
  std::string summary_path;
  std::string output_path;
};

/// Parses argv and runs the selected subcommand, writing the human-readable
/// summary to `out` and diagnostics to `err`. Returns the process exit code.
int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace ultraco::cli
