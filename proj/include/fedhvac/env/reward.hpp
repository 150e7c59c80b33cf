#pragma once

namespace fedhvac::env {

struct RewardParams {
  double lambda_p = 1e-5;   // per W
  double lambda_g = 0.2;
  double lambda_t = 0.1;
  double t_min = 18.0;
  double t_max = 27.0;
  double t_target = 22.5;

  bool operator==(const RewardParams&) const = default;
};

/// exp(-lambda_g (T - T_tgt)^2) - lambda_t (max(T_min - T, 0) + max(T - T_max, 0))
double comfort_reward(double temp, const RewardParams& p = {});

/// r_west + r_east - lambda_p (P_it + P_hvac), powers in W.
double total_reward(double r_west, double r_east, double p_it, double p_hvac, const RewardParams& p = {});

/// Outside the closed interval [t_min, t_max].
bool comfort_violated(double temp, const RewardParams& p = {});

}  // namespace fedhvac::env
