#include "fedhvac/sac/normalizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fedhvac::sac {

void RunningMeanStd::update(std::span<const double> x) {
  if (x.size() != mean.size()) throw std::invalid_argument("normalizer dimension mismatch");
  const double total = count + 1.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double delta = x[i] - mean[i];
    const double new_mean = mean[i] + delta / total;
    const double m2 = var[i] * count + delta * delta * count / total;
    mean[i] = new_mean;
    var[i] = m2 / total;
  }
  count = total;
}

void RunningMeanStd::merge(const RunningMeanStd& other) {
  if (other.mean.size() != mean.size()) throw std::invalid_argument("normalizer dimension mismatch");
  const double total = count + other.count;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double delta = other.mean[i] - mean[i];
    const double m2 = var[i] * count + other.var[i] * other.count + delta * delta * count * other.count / total;
    mean[i] += delta * other.count / total;
    var[i] = m2 / total;
  }
  count = total;
}

RunningNormalizer::RunningNormalizer(std::size_t obs_dim, double gamma_, double clip_obs_,
                                     double clip_reward_, double epsilon_)
    : obs_rms(obs_dim), gamma(gamma_), clip_obs(clip_obs_), clip_reward(clip_reward_), epsilon(epsilon_) {}

void RunningNormalizer::observe(std::span<const double> raw_obs) {
  if (training) obs_rms.update(raw_obs);
}

void RunningNormalizer::observe_reward(double raw_reward, bool episode_end) {
  if (!training) return;
  returns = returns * gamma + raw_reward;
  const double r[1] = {returns};
  ret_rms.update(r);
  if (episode_end) returns = 0.0;
}

void RunningNormalizer::normalize_obs_into(std::span<const double> raw_obs, std::span<double> out) const {
  if (raw_obs.size() != obs_dim() || out.size() != obs_dim()) {
    throw std::invalid_argument("normalizer dimension mismatch");
  }
  for (std::size_t i = 0; i < raw_obs.size(); ++i) {
    const double z = (raw_obs[i] - obs_rms.mean[i]) / std::sqrt(obs_rms.var[i] + epsilon);
    out[i] = std::clamp(z, -clip_obs, clip_obs);
  }
}

std::vector<double> RunningNormalizer::normalize_obs(std::span<const double> raw_obs) const {
  std::vector<double> out(raw_obs.size());
  normalize_obs_into(raw_obs, out);
  return out;
}

double RunningNormalizer::normalize_reward(double raw_reward) const {
  return std::clamp(raw_reward / std::sqrt(ret_rms.var[0] + epsilon), -clip_reward, clip_reward);
}

RunningNormalizer pool_normalizers(std::span<const RunningNormalizer> parts) {
  if (parts.empty()) throw std::invalid_argument("cannot pool zero normalizers");
  RunningNormalizer pooled = parts.front();
  for (std::size_t k = 1; k < parts.size(); ++k) {
    pooled.obs_rms.merge(parts[k].obs_rms);
    pooled.ret_rms.merge(parts[k].ret_rms);
  }
  pooled.returns = 0.0;
  return pooled;
}

}  // namespace fedhvac::sac
