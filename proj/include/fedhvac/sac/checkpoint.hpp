#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "fedhvac/sac/agent.hpp"
#include "fedhvac/sac/normalizer.hpp"

namespace fedhvac::sac {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything needed to act with (and resume the networks of) a trained agent.
///
/// On-disk layout, little-endian, no padding:
///   magic "FHVCKPT1" | u32 version
///   u64 obs_dim | vec<f64> box.low | vec<f64> box.high | vec<u64> hidden
///   f64 gamma, polyak, log_std_min, log_std_max, log_alpha, target_entropy
///   vec<f64> actor, critic1, critic2, target1, target2
///   normalizer: vec<f64> obs mean, obs var | f64 obs count
///               vec<f64> ret mean, ret var | f64 ret count | f64 returns, gamma,
///               clip_obs, clip_reward, epsilon
///   u64 gradient_steps, env_steps, episode, round
/// where vec<T> is a u64 length followed by the elements.
struct Checkpoint {
  SacConfig config;
  nn::ParamVector actor;
  nn::ParamVector critic1;
  nn::ParamVector critic2;
  nn::ParamVector target1;
  nn::ParamVector target2;
  double log_alpha = 0.0;
  RunningNormalizer normalizer;
  std::uint64_t gradient_steps = 0;
  std::uint64_t env_steps = 0;
  std::uint64_t episode = 0;
  std::uint64_t round = 0;

  bool operator==(const Checkpoint&) const = default;
};

Checkpoint make_checkpoint(const SacAgent& agent, const RunningNormalizer& normalizer);

/// Fresh agent carrying the checkpoint's networks and temperature. Optimizer
/// moments are not stored and start from zero.
SacAgent restore_agent(const Checkpoint& ckpt, std::uint64_t seed = 0);

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace fedhvac::sac
