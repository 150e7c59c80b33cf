#pragma once

#include <cstddef>
#include <vector>

#include "fedhvac/env/hvac_env.hpp"

namespace fedhvac::env {

inline constexpr std::size_t kStepsPerWeek = 7 * 24 * kStepsPerHour;  // 672
inline constexpr std::size_t kWeeksPerYear = (kEpisodeSteps + kStepsPerWeek - 1) / kStepsPerWeek;  // 53

/// Per-episode energy, comfort and return accumulator.
struct EpisodeStats {
  double energy_joules = 0.0;
  double total_return = 0.0;
  std::size_t steps = 0;
  std::size_t violations = 0;
  std::vector<std::size_t> week_steps = std::vector<std::size_t>(kWeeksPerYear, 0);
  std::vector<std::size_t> week_violations = std::vector<std::size_t>(kWeeksPerYear, 0);

  void add(const StepResult& r, double step_seconds);
  void clear() { *this = EpisodeStats{}; }

  double energy_kwh() const { return energy_joules / 3.6e6; }
  double energy_gwh() const { return energy_joules / 3.6e12; }
  double violation_pct() const;
  /// Percentage per week; weeks without steps report 0.
  std::vector<double> weekly_violation_pct() const;
};

}  // namespace fedhvac::env
