#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "fedhvac/env/episode_stats.hpp"
#include "fedhvac/env/hvac_env.hpp"
#include "fedhvac/fed/aggregation.hpp"
#include "fedhvac/sac/agent.hpp"
#include "fedhvac/sac/normalizer.hpp"
#include "fedhvac/sac/replay_buffer.hpp"

namespace fedhvac::fed {

/// Networks exchanged with the server, in this order. Optimizer states, the
/// temperature, the replay buffer and the normalizer stay on the client.
inline constexpr std::size_t kNumFederatedNetworks = 5;
inline constexpr std::array<std::string_view, kNumFederatedNetworks> kNetworkNames{
    "actor", "critic1", "critic2", "target1", "target2"};

std::vector<nn::ParamVector> extract_networks(const sac::SacAgent& agent);
void load_networks(sac::SacAgent& agent, const std::vector<nn::ParamVector>& nets);

/// Action box matching the environment's setpoint bounds.
sac::ActionBox action_box_from(const env::ActionBounds& bounds);

/// One learner bound to one building: agent, buffer, normalizer and the live episode.
class HvacClient {
 public:
  HvacClient(env::HvacEnv env, const sac::SacConfig& config, std::uint64_t seed);

  /// Resets the environment with a fresh OU draw and clears episode stats.
  void begin_episode(std::uint64_t episode_seed);
  /// One interaction: act, step, store, update normalizer statistics.
  env::StepResult env_step();
  /// train_freq env steps, then gradient_steps SAC updates once learning has started.
  void local_update();

  bool episode_done() const { return env_.done(); }
  std::size_t transitions_per_update() const { return agent_.config.train_freq; }

  sac::SacAgent& agent() { return agent_; }
  const sac::SacAgent& agent() const { return agent_; }
  sac::ReplayBuffer& buffer() { return buffer_; }
  const sac::RunningNormalizer& normalizer() const { return normalizer_; }
  sac::RunningNormalizer& normalizer() { return normalizer_; }
  env::HvacEnv& env() { return env_; }
  const env::HvacEnv& env() const { return env_; }
  const env::EpisodeStats& stats() const { return stats_; }
  std::uint64_t env_steps() const { return env_steps_; }
  const std::optional<sac::SacLosses>& last_losses() const { return last_losses_; }

 private:
  env::HvacEnv env_;
  sac::SacAgent agent_;
  sac::ReplayBuffer buffer_;
  sac::RunningNormalizer normalizer_;
  Rng explore_rng_;
  env::Observation obs_;
  env::EpisodeStats stats_;
  std::uint64_t env_steps_ = 0;
  bool started_ = false;
  std::optional<sac::SacLosses> last_losses_;
};

/// Loads the global networks, runs U local updates and returns the per-network
/// deltas together with n = U * train_freq.
ClientUpdate run_client_round(HvacClient& client, const std::vector<nn::ParamVector>& globals,
                              std::size_t local_updates);

}  // namespace fedhvac::fed
