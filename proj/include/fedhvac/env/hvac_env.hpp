#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedhvac/env/building.hpp"
#include "fedhvac/env/reward.hpp"
#include "fedhvac/env/weather.hpp"

namespace fedhvac::env {

inline constexpr std::size_t kEpisodeSteps = 35'040;
inline constexpr std::size_t kBaseFeatures = 18;
inline constexpr std::size_t kTimeFeatures = 4;
inline constexpr std::size_t kActionDim = 4;

/// [west cooling, west heating, east cooling, east heating] setpoints in deg C.
using ActionVector = std::array<double, kActionDim>;
using Observation = std::vector<double>;

struct ActionBounds {
  ActionVector low{15.0, 22.5, 15.0, 22.5};
  ActionVector high{22.5, 30.0, 22.5, 30.0};

  bool operator==(const ActionBounds&) const = default;
};

/// Observation layout (indices), in the order of the state description table.
enum ObsIndex : std::size_t {
  kOutdoorTemp = 0,
  kOutdoorRh,
  kWindSpeed,
  kWindDirection,
  kDiffuseSolar,
  kDirectSolar,
  kWestTemp,
  kWestRh,
  kEastTemp,
  kEastRh,
  kHvacPower,
  kBuildingPower,
  kForecastTemp1h,
  kForecastRh1h,
  kForecastTemp3h,
  kForecastRh3h,
  kForecastTemp6h,
  kForecastRh6h,
  kHourSin,  // optional time encodings
  kHourCos,
  kDaySin,
  kDayCos,
};

struct EnvConfig {
  BuildingParams building;
  OuParams ou;
  RewardParams reward;
  ActionBounds bounds;
  bool time_features = true;
  double initial_temp = 22.5;
  double initial_rh = 50.0;

  std::size_t obs_dim() const { return kBaseFeatures + (time_features ? kTimeFeatures : 0); }
  void validate() const;
  bool operator==(const EnvConfig&) const = default;
};

struct BuildingState {
  double t_west = 22.5;
  double t_east = 22.5;
  double rh_west = 50.0;
  double rh_east = 50.0;
  std::size_t t = 0;
  double p_it = 0.0;    // W during the last step
  double p_hvac = 0.0;  // W during the last step
};

struct StepInfo {
  double p_it = 0.0;
  double p_hvac = 0.0;
  double p_hvac_west = 0.0;
  double p_hvac_east = 0.0;
  double t_west = 0.0;
  double t_east = 0.0;
  double t_out = 0.0;
  bool violation = false;
};

struct StepResult {
  Observation obs;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

class EnvError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Two-zone data-center environment, one 15-minute control step per call.
class HvacEnv {
 public:
  HvacEnv(const ClimateProfile& climate, std::uint64_t base_seed, EnvConfig config = {});
  HvacEnv(std::string name, WeatherSeries base, EnvConfig config = {});

  /// Fresh OU-perturbed year, zones at the initial temperature/humidity.
  Observation reset(std::uint64_t episode_seed);
  StepResult step(const ActionVector& action);

  const std::string& name() const { return name_; }
  const EnvConfig& config() const { return config_; }
  std::size_t obs_dim() const { return config_.obs_dim(); }
  const WeatherSeries& base_weather() const { return base_; }
  const WeatherSeries& weather() const { return weather_; }
  const BuildingState& state() const { return state_; }
  /// Overrides zone temperatures (tests and diagnostics).
  void force_zone_temps(double t_west, double t_east);
  bool done() const { return state_.t >= kEpisodeSteps; }
  Observation observe() const;

 private:
  std::string name_;
  EnvConfig config_;
  WeatherSeries base_;
  WeatherSeries weather_;
  BuildingState state_;
  bool started_ = false;
};

ActionVector to_action(const std::vector<double>& v);

/// step,T_west,T_east,T_out,P_it,P_hvac,reward,violation
class TraceWriter {
 public:
  explicit TraceWriter(const std::filesystem::path& path);
  void write(std::size_t step, const StepResult& r);

 private:
  std::ofstream out_;
};

}  // namespace fedhvac::env
