#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fedhvac::orchestrator {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
};

/// Percentile bootstrap of the mean. A single value (or identical values) gives a
/// zero-width interval at that value.
Interval bootstrap_ci(std::span<const double> values, std::size_t resamples = 10'000, double level = 0.95,
                      std::uint64_t seed = 0x5eed);

/// Final-checkpoint evaluation of one run.
struct RunResult {
  std::string config;  // grouping key
  std::uint64_t seed = 0;
  double e_tot_gwh = 0.0;
  double violation_pct = 0.0;
  double mean_return = 0.0;
};

struct ConfigSummary {
  std::string config;
  std::size_t runs = 0;
  double e_tot_gwh = 0.0;
  Interval e_tot_ci;
  double violation_pct = 0.0;
  Interval violation_ci;
  double mean_return = 0.0;
  Interval return_ci;
  bool best = false;
};

/// One row per config (sorted by name); the row with the highest mean return is flagged.
std::vector<ConfigSummary> summarize(std::span<const RunResult> runs, std::size_t resamples = 10'000);

}  // namespace fedhvac::orchestrator
