#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fedhvac/core/rng.hpp"
#include "fedhvac/nn/mlp.hpp"
#include "fedhvac/nn/optimizer.hpp"
#include "fedhvac/sac/normalizer.hpp"
#include "fedhvac/sac/replay_buffer.hpp"

namespace fedhvac::sac {

class PolicyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Box of admissible environment actions. The policy squashes into (-1, 1) and
/// rescales affinely into [low, high].
struct ActionBox {
  std::vector<double> low;
  std::vector<double> high;

  std::size_t size() const { return low.size(); }
  double mid(std::size_t j) const { return 0.5 * (low[j] + high[j]); }
  double half(std::size_t j) const { return 0.5 * (high[j] - low[j]); }
  void validate() const;
  bool operator==(const ActionBox&) const = default;
};

struct SacConfig {
  std::size_t obs_dim = 22;
  ActionBox action_box;
  std::vector<std::size_t> hidden{256, 256};
  double gamma = 0.99;
  double polyak = 0.005;
  std::size_t batch_size = 256;
  std::size_t train_freq = 4;
  std::size_t gradient_steps = 4;
  std::size_t learning_starts = 100;
  std::size_t buffer_capacity = 1'000'000;
  std::optional<double> target_entropy;  // defaults to -action dim
  double initial_log_alpha = 0.0;
  double log_std_min = -20.0;
  double log_std_max = 2.0;
  nn::OptimizerHyper optimizer;

  void validate() const;
  bool operator==(const SacConfig&) const = default;
};

/// Soft actor-critic state. The actor emits [mean (A), log_std (A)]; each critic
/// maps [obs, squashed action in (-1,1)] to a scalar.
struct SacAgent {
  SacConfig config;
  nn::MlpSpec actor_spec;
  nn::MlpSpec critic_spec;
  nn::ParamVector actor;
  nn::ParamVector critic1;
  nn::ParamVector critic2;
  nn::ParamVector target1;
  nn::ParamVector target2;
  double log_alpha = 0.0;
  nn::OptimizerState actor_opt;
  nn::OptimizerState critic1_opt;
  nn::OptimizerState critic2_opt;
  nn::OptimizerState alpha_opt;
  Rng rng;
  std::uint64_t gradient_steps = 0;

  static SacAgent create(const SacConfig& config, std::uint64_t seed);

  std::size_t obs_dim() const { return config.obs_dim; }
  std::size_t act_dim() const { return config.action_box.size(); }
  double alpha() const;
  double target_entropy() const;
};

nn::MlpSpec make_actor_spec(const SacConfig& config);
nn::MlpSpec make_critic_spec(const SacConfig& config);

struct SampledAction {
  std::vector<double> action;  // environment units
  double log_prob = 0.0;
};

/// a = mid + half * tanh(mean + exp(log_std) * noise); `obs` must be normalized.
SampledAction sample_action(const SacAgent& agent, std::span<const double> obs,
                            std::span<const double> noise);
SampledAction sample_action(const SacAgent& agent, std::span<const double> obs, Rng& rng);
std::vector<double> act_deterministic(const SacAgent& agent, std::span<const double> obs);

/// Uniform draw from the action box (used before learning starts).
std::vector<double> uniform_action(const ActionBox& box, Rng& rng);

/// Log-density of the squashed Gaussian in environment units, for one sample
/// given the pre-squash Gaussian parameters and the standard-normal noise.
double squashed_log_prob(std::span<const double> mean, std::span<const double> log_std,
                         std::span<const double> noise, const ActionBox& box);

// ---------------------------------------------------------------------------
// Loss pieces. Exposed so each gradient can be checked independently.

/// Mini-batch in network units: normalized observations/rewards, actions in (-1, 1).
struct TrainingBatch {
  nn::Batch obs;           // obs_dim x B
  nn::Batch actions;       // act_dim x B
  Eigen::RowVectorXd rewards;
  nn::Batch next_obs;      // obs_dim x B
  Eigen::RowVectorXd dones;  // 1 for terminal, 0 otherwise

  Eigen::Index size() const { return obs.cols(); }
};

TrainingBatch make_batch(const ReplayBuffer& buffer, std::span<const std::size_t> slots,
                         const RunningNormalizer& normalizer, const ActionBox& box);

/// y = r + gamma * (1 - done) * (min_q - alpha * log_prob)
double soft_target(double reward, double gamma, double min_target_q, double alpha, double log_prob,
                   bool done);

/// Target values from the target critics, with next actions drawn using `next_noise`.
Eigen::RowVectorXd compute_targets(const SacAgent& agent, const TrainingBatch& batch,
                                   const nn::Batch& next_noise);

struct LossAndGrad {
  double loss = 0.0;
  nn::GradVector grad;
};

/// mean over the batch of 0.5 * (Q(s, a) - y)^2
LossAndGrad critic_loss(const nn::MlpSpec& critic_spec, const nn::ParamVector& critic,
                        const TrainingBatch& batch, const Eigen::RowVectorXd& targets);

struct ActorLoss {
  double loss = 0.0;
  nn::GradVector grad;
  Eigen::RowVectorXd log_probs;
};

/// mean over the batch of alpha * log_prob - min(Q1, Q2) with reparameterized actions.
ActorLoss actor_loss(const SacAgent& agent, const nn::Batch& obs, const nn::Batch& noise);

struct TemperatureLoss {
  double loss = 0.0;
  double grad = 0.0;  // with respect to log_alpha
};

/// mean over the batch of -alpha * (log_prob + target_entropy), alpha = exp(log_alpha).
TemperatureLoss temperature_loss(double log_alpha, const Eigen::RowVectorXd& log_probs,
                                 double target_entropy);

/// target <- rho * source + (1 - rho) * target
void polyak_update(nn::ParamVector& target, const nn::ParamVector& source, double rho);

struct SacLosses {
  double critic1 = 0.0;
  double critic2 = 0.0;
  double actor = 0.0;
  double alpha_loss = 0.0;
  double alpha = 0.0;
};

/// Batch -> critic steps -> actor step -> temperature step -> Polyak update.
/// Returns nullopt (and changes nothing) while the buffer holds fewer than
/// max(batch_size, learning_starts) transitions.
std::optional<SacLosses> sac_gradient_step(SacAgent& agent, ReplayBuffer& buffer,
                                           const RunningNormalizer& normalizer);

}  // namespace fedhvac::sac
