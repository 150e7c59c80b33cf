#include "fedhvac/fed/client.hpp"

#include <stdexcept>

namespace fedhvac::fed {

std::vector<nn::ParamVector> extract_networks(const sac::SacAgent& agent) {
  return {agent.actor, agent.critic1, agent.critic2, agent.target1, agent.target2};
}

void load_networks(sac::SacAgent& agent, const std::vector<nn::ParamVector>& nets) {
  if (nets.size() != kNumFederatedNetworks) throw AggregationError("expected five federated networks");
  nn::ParamVector* slots[] = {&agent.actor, &agent.critic1, &agent.critic2, &agent.target1, &agent.target2};
  for (std::size_t k = 0; k < kNumFederatedNetworks; ++k) {
    if (nets[k].size() != slots[k]->size()) {
      throw AggregationError("global " + std::string(kNetworkNames[k]) + " has the wrong parameter count");
    }
    *slots[k] = nets[k];
  }
}

sac::ActionBox action_box_from(const env::ActionBounds& bounds) {
  sac::ActionBox box;
  box.low.assign(bounds.low.begin(), bounds.low.end());
  box.high.assign(bounds.high.begin(), bounds.high.end());
  return box;
}

HvacClient::HvacClient(env::HvacEnv env, const sac::SacConfig& config, std::uint64_t seed)
    : env_(std::move(env)),
      agent_(sac::SacAgent::create(config, derive_seed(seed, 1))),
      buffer_(config.buffer_capacity, config.obs_dim, config.action_box.size(), derive_seed(seed, 2)),
      normalizer_(config.obs_dim, config.gamma),
      explore_rng_(derive_seed(seed, 3)) {
  if (env_.obs_dim() != config.obs_dim) throw std::invalid_argument("SAC obs_dim does not match the environment");
  if (config.action_box.size() != env::kActionDim) throw std::invalid_argument("SAC action box must have 4 entries");
}

void HvacClient::begin_episode(std::uint64_t episode_seed) {
  obs_ = env_.reset(episode_seed);
  normalizer_.observe(obs_);
  stats_.clear();
  started_ = true;
}

env::StepResult HvacClient::env_step() {
  if (!started_) throw env::EnvError("client episode not started");
  std::vector<double> action;
  if (env_steps_ < agent_.config.learning_starts) {
    action = sac::uniform_action(agent_.config.action_box, explore_rng_);
  } else {
    action = sac::sample_action(agent_, normalizer_.normalize_obs(obs_), explore_rng_).action;
  }
  env::StepResult r = env_.step(env::to_action(action));
  // Year-end is a time-limit truncation, so the stored transition is not terminal.
  buffer_.add(obs_, action, r.reward, r.obs, false);
  normalizer_.observe(r.obs);
  normalizer_.observe_reward(r.reward, r.done);
  stats_.add(r, env_.config().building.step_seconds);
  obs_ = r.obs;
  ++env_steps_;
  return r;
}

void HvacClient::local_update() {
  for (std::size_t i = 0; i < agent_.config.train_freq; ++i) env_step();
  if (env_steps_ < agent_.config.learning_starts) return;
  for (std::size_t g = 0; g < agent_.config.gradient_steps; ++g) {
    auto losses = sac::sac_gradient_step(agent_, buffer_, normalizer_);
    if (losses) last_losses_ = losses;
  }
}

ClientUpdate run_client_round(HvacClient& client, const std::vector<nn::ParamVector>& globals,
                              std::size_t local_updates) {
  if (local_updates == 0) throw std::invalid_argument("local_updates must be positive");
  load_networks(client.agent(), globals);
  for (std::size_t u = 0; u < local_updates; ++u)
    client.local_update();
  ClientUpdate update;
  const auto local = extract_networks(client.agent());
  for (std::size_t k = 0; k < kNumFederatedNetworks; ++k) {
    nn::GradVector d(local[k].size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = local[k][i] - globals[k][i];
    update.deltas.push_back(std::move(d));
  }
  update.n = local_updates * client.transitions_per_update();
  return update;
}

}  // namespace fedhvac::fed
