#include "fedhvac/orchestrator/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fedhvac::orchestrator {

env::ActionVector SacPolicy::act(const env::Observation& raw_obs) {
  return env::to_action(sac::act_deterministic(agent_, normalizer_.normalize_obs(raw_obs)));
}

void PidGains::validate() const {
  for (double g : {kp, ki, kd, scale, integral_clamp, target}) {
    if (!std::isfinite(g)) throw std::invalid_argument("PID gains must be finite");
  }
  if (integral_clamp < 0.0) throw std::invalid_argument("PID integral clamp must be non-negative");
}

PidController::PidController(PidGains gains, env::ActionBounds bounds) : gains_(gains), bounds_(bounds) {
  gains_.validate();
}

void PidController::reset() {
  integral_ = {};
  prev_error_ = {};
  primed_ = false;
}

env::ActionVector PidController::act(const env::Observation& raw_obs) {
  const double temps[2] = {raw_obs.at(env::kWestTemp), raw_obs.at(env::kEastTemp)};
  env::ActionVector a{};
  for (std::size_t z = 0; z < 2; ++z) {
    const double e = gains_.target - temps[z];
    integral_[z] += e;
    // Anti-windup: the integral contribution never exceeds the clamp.
    if (gains_.ki != 0.0) {
      const double limit = gains_.integral_clamp / std::abs(gains_.ki);
      integral_[z] = std::clamp(integral_[z], -limit, limit);
    }
    const double de = primed_ ? e - prev_error_[z] : 0.0;
    prev_error_[z] = e;
    const double u = gains_.kp * e + gains_.ki * integral_[z] + gains_.kd * de;
    const double sp = gains_.target + u * gains_.scale;
    a[2 * z] = std::clamp(sp, bounds_.low[2 * z], bounds_.high[2 * z]);
    a[2 * z + 1] = std::clamp(sp, bounds_.low[2 * z + 1], bounds_.high[2 * z + 1]);
  }
  primed_ = true;
  return a;
}

EvalResult evaluate_policy(Policy& policy, env::HvacEnv& env, std::span<const std::uint64_t> episode_seeds) {
  if (episode_seeds.empty()) throw std::invalid_argument("evaluation needs at least one episode");
  EvalResult r;
  const double dt = env.config().building.step_seconds;
  for (std::uint64_t seed : episode_seeds) {
    policy.reset();
    env::Observation obs = env.reset(seed);
    env::EpisodeStats stats;
    while (!env.done()) {
      const env::StepResult s = env.step(policy.act(obs));
      stats.add(s, dt);
      obs = s.obs;
    }
    r.mean_energy_gwh += stats.energy_gwh();
    r.mean_violation_pct += stats.violation_pct();
    r.mean_return += stats.total_return;
    r.episodes.push_back(std::move(stats));
  }
  const double n = static_cast<double>(episode_seeds.size());
  r.mean_energy_gwh /= n;
  r.mean_violation_pct /= n;
  r.mean_return /= n;
  return r;
}

}  // namespace fedhvac::orchestrator
