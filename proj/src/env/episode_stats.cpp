#include "fedhvac/env/episode_stats.hpp"

namespace fedhvac::env {

void EpisodeStats::add(const StepResult& r, double step_seconds) {
  energy_joules += (r.info.p_it + r.info.p_hvac) * step_seconds;
  total_return += r.reward;
  const std::size_t week = steps / kStepsPerWeek;
  ++steps;
  if (week < week_steps.size()) {
    ++week_steps[week];
    if (r.info.violation) ++week_violations[week];
  }
  if (r.info.violation) ++violations;
}

double EpisodeStats::violation_pct() const {
  return steps == 0 ? 0.0 : 100.0 * static_cast<double>(violations) / static_cast<double>(steps);
}

std::vector<double> EpisodeStats::weekly_violation_pct() const {
  std::vector<double> out(week_steps.size(), 0.0);
  for (std::size_t w = 0; w < out.size(); ++w) {
    if (week_steps[w] > 0) {
      out[w] = 100.0 * static_cast<double>(week_violations[w]) / static_cast<double>(week_steps[w]);
    }
  }
  return out;
}

}  // namespace fedhvac::env
