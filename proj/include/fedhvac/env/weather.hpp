#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fedhvac/core/rng.hpp"

namespace fedhvac::env {

inline constexpr std::size_t kHoursPerYear = 8760;
inline constexpr std::size_t kStepsPerHour = 4;

/// Parameters of a synthetic climate. The means come from the base weather
/// files; amplitudes, noise levels and phases are shape parameters of the
/// synthetic generator.
struct ClimateProfile {
  std::string name;
  double mean_temp = 0.0;        // deg C
  double mean_rh = 50.0;         // %
  double annual_amplitude = 0.0; // deg C
  double diurnal_amplitude = 0.0;
  double rh_amplitude = 0.0;     // % (annual and diurnal swing, anti-phased with temperature)
  double temp_noise = 0.0;       // stationary std of hourly temperature noise
  double rh_noise = 0.0;
  double peak_day = 200.0;       // day of year with the warmest mean temperature
  double latitude = 45.0;        // degrees, negative in the southern hemisphere
  double mean_wind = 4.0;        // m/s

  void validate() const;
};

/// The twelve climates: eleven training sites plus Helsinki.
const std::vector<ClimateProfile>& builtin_climates();
const ClimateProfile& climate_by_name(std::string_view name);
std::vector<std::string> training_climate_names();
inline constexpr std::string_view kEvalClimate = "helsinki";

/// Hourly weather over one year.
struct WeatherSeries {
  std::vector<double> temp;         // outdoor dry-bulb, deg C
  std::vector<double> rh;           // %
  std::vector<double> wind_speed;   // m/s
  std::vector<double> wind_dir;     // degrees
  std::vector<double> diffuse_solar;  // W/m2
  std::vector<double> direct_solar;   // W/m2

  static WeatherSeries constant(double temp, double rh, double wind_speed = 0.0);
  void validate() const;
  bool operator==(const WeatherSeries&) const = default;
};

/// Deterministic synthetic base year. Annual temperature and humidity means match
/// the profile.
WeatherSeries synth_base_weather(const ClimateProfile& profile, std::uint64_t base_seed);

/// dX = tau (mu - X) dt + sigma dW, discretized hourly by Euler-Maruyama.
struct OuParams {
  double tau = 0.001;
  double sigma = 2.0;
  double mu = 0.0;
  double dt = 1.0;
  double initial = 0.0;
  double max_temp_offset = 10.0;  // deg C
  double max_rh_offset = 10.0;    // %

  void validate() const;
  bool operator==(const OuParams&) const = default;
};

/// n samples X_0 .. X_{n-1}. Each state is clamped to [-max_offset, max_offset].
std::vector<double> ou_path(const OuParams& params, std::size_t n, double max_offset, Rng& rng);

/// Adds independent OU offsets to temperature and humidity (humidity re-clamped).
WeatherSeries ou_perturb(const WeatherSeries& base, const OuParams& params, std::uint64_t episode_seed);

/// Base-series temperature and humidity at +1 h, +3 h and +6 h from env step t,
/// ordered (T+1, RH+1, T+3, RH+3, T+6, RH+6).
std::array<double, 6> forecast_at(const WeatherSeries& base, std::size_t t);

}  // namespace fedhvac::env
