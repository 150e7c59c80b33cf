#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "fedhvac/env/episode_stats.hpp"
#include "fedhvac/env/hvac_env.hpp"
#include "fedhvac/sac/agent.hpp"
#include "fedhvac/sac/normalizer.hpp"

namespace fedhvac::orchestrator {

/// Maps raw observations to setpoints. reset() is called at the start of each episode.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual void reset() {}
  virtual env::ActionVector act(const env::Observation& raw_obs) = 0;
};

/// Deterministic SAC action (tanh of the mean) under frozen normalizer statistics.
class SacPolicy final : public Policy {
 public:
  SacPolicy(const sac::SacAgent& agent, const sac::RunningNormalizer& normalizer)
      : agent_(agent), normalizer_(normalizer) {}
  env::ActionVector act(const env::Observation& raw_obs) override;

 private:
  const sac::SacAgent& agent_;
  const sac::RunningNormalizer& normalizer_;
};

class ConstantPolicy final : public Policy {
 public:
  explicit ConstantPolicy(env::ActionVector action) : action_(action) {}
  env::ActionVector act(const env::Observation&) override { return action_; }

 private:
  env::ActionVector action_;
};

struct PidGains {
  double kp = 2.0;
  double ki = 0.02;  // per control step
  double kd = 0.0;
  double scale = 1.0;           // deg C of setpoint shift per unit of controller output
  double integral_clamp = 5.0;  // bound on |ki * integral|, deg C
  double target = 22.5;

  void validate() const;
  bool operator==(const PidGains&) const = default;
};

/// Per-zone PID on zone temperature. u = kp e + ki I + kd (e - e_prev), e = target - T.
/// cooling = clip(target + u*scale, bounds), heating = clip(target + u*scale, bounds).
class PidController final : public Policy {
 public:
  explicit PidController(PidGains gains, env::ActionBounds bounds = {});
  void reset() override;
  env::ActionVector act(const env::Observation& raw_obs) override;
  double integral_term(std::size_t zone) const { return gains_.ki * integral_[zone]; }

 private:
  PidGains gains_;
  env::ActionBounds bounds_;
  std::array<double, 2> integral_{};
  std::array<double, 2> prev_error_{};
  bool primed_ = false;
};

struct EvalResult {
  std::vector<env::EpisodeStats> episodes;
  double mean_energy_gwh = 0.0;
  double mean_violation_pct = 0.0;
  double mean_return = 0.0;
};

/// Runs one full episode per seed with no learning and returns per-episode stats and means.
EvalResult evaluate_policy(Policy& policy, env::HvacEnv& env, std::span<const std::uint64_t> episode_seeds);

}  // namespace fedhvac::orchestrator
