#include "fedhvac/env/reward.hpp"

#include <algorithm>
#include <cmath>

namespace fedhvac::env {

double comfort_reward(double temp, const RewardParams& p) {
  const double d = temp - p.t_target;
  const double gaussian = std::exp(-p.lambda_g * d * d);
  const double trapezoid = std::max(p.t_min - temp, 0.0) + std::max(temp - p.t_max, 0.0);
  return gaussian - p.lambda_t * trapezoid;
}

double total_reward(double r_west, double r_east, double p_it, double p_hvac, const RewardParams& p) {
  return r_west + r_east - p.lambda_p * (p_it + p_hvac);
}

bool comfort_violated(double temp, const RewardParams& p) { return temp < p.t_min || temp > p.t_max; }

}  // namespace fedhvac::env
