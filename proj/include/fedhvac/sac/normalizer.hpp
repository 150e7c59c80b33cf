#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fedhvac::sac {

/// Running mean/variance with the parallel (Chan et al.) merge rule. The count
/// starts at a small epsilon so the first observation does not divide by zero.
struct RunningMeanStd {
  std::vector<double> mean;
  std::vector<double> var;
  double count = 1e-4;

  RunningMeanStd() = default;
  explicit RunningMeanStd(std::size_t dim) : mean(dim, 0.0), var(dim, 1.0) {}

  void update(std::span<const double> x);
  void merge(const RunningMeanStd& other);

  bool operator==(const RunningMeanStd&) const = default;
};

/// Moving-average normalization of observations and rewards.
///  obs:    clip((x - mean) / sqrt(var + eps), +-clip_obs)
///  reward: clip(r / sqrt(var(discounted return) + eps), +-clip_reward)
/// When `training` is false the statistics are frozen.
class RunningNormalizer {
 public:
  RunningNormalizer() = default;
  explicit RunningNormalizer(std::size_t obs_dim, double gamma = 0.99, double clip_obs = 10.0,
                             double clip_reward = 10.0, double epsilon = 1e-8);

  void observe(std::span<const double> raw_obs);
  /// Folds a reward into the discounted-return accumulator. `episode_end` resets it.
  void observe_reward(double raw_reward, bool episode_end);

  std::vector<double> normalize_obs(std::span<const double> raw_obs) const;
  void normalize_obs_into(std::span<const double> raw_obs, std::span<double> out) const;
  double normalize_reward(double raw_reward) const;

  std::size_t obs_dim() const { return obs_rms.mean.size(); }

  RunningMeanStd obs_rms;
  RunningMeanStd ret_rms{1};
  double returns = 0.0;
  double gamma = 0.99;
  double clip_obs = 10.0;
  double clip_reward = 10.0;
  double epsilon = 1e-8;
  bool training = true;

  bool operator==(const RunningNormalizer&) const = default;
};

/// Pools the statistics of several normalizers (used for evaluating a global model).
RunningNormalizer pool_normalizers(std::span<const RunningNormalizer> parts);

}  // namespace fedhvac::sac
