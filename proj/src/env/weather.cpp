#include "fedhvac/env/weather.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace fedhvac::env {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kDegToRad = std::numbers::pi / 180.0;

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Zero-mean AR(1) noise with stationary standard deviation `std_dev`.
std::vector<double> ar1_noise(Rng& rng, double phi, double std_dev, std::size_t n) {
  std::vector<double> x(n, 0.0);
  if (std_dev == 0.0) return x;
  const double innovation = std_dev * std::sqrt(1.0 - phi * phi);
  double state = std_dev * rng.normal();
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = state;
    state = phi * state + innovation * rng.normal();
  }
  const double m = mean_of(x);
  for (auto& v : x) v -= m;
  return x;
}

// Shifts `raw` so that after clamping to [0, 100] its mean equals `target`.
std::vector<double> clamp_with_mean(const std::vector<double>& raw, double target) {
  std::vector<double> out(raw.size());
  double shift = 0.0;
  for (int iter = 0; iter < 50; ++iter) {
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = std::clamp(raw[i] + shift, 0.0, 100.0);
    const double err = target - mean_of(out);
    if (std::abs(err) < 1e-9) break;
    shift += err;
  }
  return out;
}

ClimateProfile make(std::string name, double mt, double mh, double annual, double diurnal, double rh_amp,
                    double peak_day, double latitude, double mean_wind) {
  ClimateProfile p;
  p.name = std::move(name);
  p.mean_temp = mt;
  p.mean_rh = mh;
  p.annual_amplitude = annual;
  p.diurnal_amplitude = diurnal;
  p.rh_amplitude = rh_amp;
  p.temp_noise = 2.0;
  p.rh_noise = 6.0;
  p.peak_day = peak_day;
  p.latitude = latitude;
  p.mean_wind = mean_wind;
  return p;
}

}  // namespace

void ClimateProfile::validate() const {
  if (!(mean_rh >= 0.0 && mean_rh <= 100.0)) throw std::invalid_argument(name + ": mean_rh outside [0, 100]");
  if (annual_amplitude < 0.0 || diurnal_amplitude < 0.0 || rh_amplitude < 0.0 || temp_noise < 0.0 ||
      rh_noise < 0.0 || mean_wind < 0.0) {
    throw std::invalid_argument(name + ": amplitudes must be non-negative");
  }
}

const std::vector<ClimateProfile>& builtin_climates() {
  // name, mean temp, mean RH, annual amp, diurnal amp, RH amp, peak day, latitude, wind
  static const std::vector<ClimateProfile> kAll = {
      make("sydney", 17.9, 68.83, 4.5, 4.0, 8.0, 20, -33.9, 4.5),
      make("bogota", 13.2, 80.3, 0.6, 6.0, 10.0, 100, 4.7, 2.5),
      make("granada", 14.84, 59.83, 9.0, 8.0, 14.0, 205, 37.2, 3.0),
      make("helsinki", 5.1, 79.25, 10.5, 3.0, 8.0, 205, 60.2, 4.5),
      make("tokyo", 8.9, 78.6, 10.0, 4.0, 9.0, 215, 35.7, 3.5),
      make("antananarivo", 18.35, 75.91, 3.0, 5.5, 9.0, 15, -18.9, 3.0),
      make("arizona", 21.7, 34.9, 10.0, 7.0, 12.0, 200, 33.4, 3.5),
      make("colorado", 9.95, 55.25, 11.0, 8.0, 12.0, 200, 39.7, 4.0),
      make("illinois", 9.92, 70.3, 13.0, 5.0, 9.0, 200, 41.9, 4.5),
      make("new_york", 12.6, 68.5, 11.0, 4.5, 9.0, 205, 40.7, 5.0),
      make("pennsylvania", 10.5, 66.41, 11.5, 5.0, 9.0, 200, 40.0, 4.0),
      make("washington", 9.3, 81.1, 7.5, 4.5, 8.0, 210, 47.6, 3.5),
  };
  return kAll;
}

const ClimateProfile& climate_by_name(std::string_view name) {
  for (const auto& p : builtin_climates()) {
    if (p.name == name) return p;
  }
  throw std::invalid_argument("unknown climate '" + std::string(name) + "'");
}

std::vector<std::string> training_climate_names() {
  std::vector<std::string> names;
  for (const auto& p : builtin_climates()) {
    if (p.name != kEvalClimate) names.push_back(p.name);
  }
  return names;
}

WeatherSeries WeatherSeries::constant(double temp, double rh, double wind_speed) {
  WeatherSeries w;
  w.temp.assign(kHoursPerYear, temp);
  w.rh.assign(kHoursPerYear, rh);
  w.wind_speed.assign(kHoursPerYear, wind_speed);
  w.wind_dir.assign(kHoursPerYear, 0.0);
  w.diffuse_solar.assign(kHoursPerYear, 0.0);
  w.direct_solar.assign(kHoursPerYear, 0.0);
  return w;
}

void WeatherSeries::validate() const {
  for (const auto* v : {&temp, &rh, &wind_speed, &wind_dir, &diffuse_solar, &direct_solar}) {
    if (v->size() != kHoursPerYear) throw std::invalid_argument("weather series must hold 8760 hourly values");
  }
  for (std::size_t h = 0; h < kHoursPerYear; ++h) {
    if (!(rh[h] >= 0.0 && rh[h] <= 100.0)) throw std::invalid_argument("relative humidity outside [0, 100]");
    if (diffuse_solar[h] < 0.0 || direct_solar[h] < 0.0) throw std::invalid_argument("negative solar radiation");
  }
}

WeatherSeries synth_base_weather(const ClimateProfile& p, std::uint64_t base_seed) {
  p.validate();
  const std::size_t n = kHoursPerYear;
  Rng temp_rng(derive_seed(base_seed, 101));
  Rng rh_rng(derive_seed(base_seed, 102));
  Rng wind_rng(derive_seed(base_seed, 103));
  Rng cloud_rng(derive_seed(base_seed, 104));

  const auto t_noise = ar1_noise(temp_rng, 0.97, p.temp_noise, n);
  const auto rh_noise = ar1_noise(rh_rng, 0.95, p.rh_noise, n);
  const auto w_noise = ar1_noise(wind_rng, 0.9, 0.35 * p.mean_wind, n);
  const auto clouds = ar1_noise(cloud_rng, 0.98, 0.3, n);

  WeatherSeries w;
  w.temp.resize(n);
  std::vector<double> rh_raw(n);
  w.wind_speed.resize(n);
  w.wind_dir.resize(n);
  w.diffuse_solar.resize(n);
  w.direct_solar.resize(n);

  const double lat = p.latitude * kDegToRad;
  double dir = 360.0 * wind_rng.uniform();
  for (std::size_t h = 0; h < n; ++h) {
    const double day = static_cast<double>(h / 24);
    const double hod = static_cast<double>(h % 24);
    const double annual = std::cos(kTwoPi * (day - p.peak_day) / 365.0);
    const double diurnal = std::cos(kTwoPi * (hod - 15.0) / 24.0);
    w.temp[h] = p.mean_temp + p.annual_amplitude * annual + p.diurnal_amplitude * diurnal + t_noise[h];
    // Humidity peaks in the cold, early hours.
    rh_raw[h] = p.mean_rh - 0.5 * p.rh_amplitude * annual - p.rh_amplitude * diurnal + rh_noise[h];

    const double diurnal_wind = p.mean_wind == 0.0 ? 0.0 : 0.25 * p.mean_wind * std::sin(kTwoPi * (hod - 9.0) / 24.0);
    w.wind_speed[h] = std::abs(p.mean_wind + diurnal_wind + w_noise[h]);
    dir = std::fmod(dir + 15.0 * wind_rng.normal() + 360.0, 360.0);
    w.wind_dir[h] = dir;

    const double decl = 23.44 * kDegToRad * std::sin(kTwoPi * (284.0 + day) / 365.0);
    const double hour_angle = (hod + 0.5 - 12.0) * 15.0 * kDegToRad;
    const double sin_elev = std::sin(lat) * std::sin(decl) + std::cos(lat) * std::cos(decl) * std::cos(hour_angle);
    const double sun = std::max(0.0, sin_elev);
    const double cloudiness = std::clamp(0.4 + clouds[h], 0.0, 1.0);
    w.direct_solar[h] = 900.0 * sun * (1.0 - 0.75 * cloudiness);
    w.diffuse_solar[h] = 150.0 * std::sqrt(sun) * (0.5 + 0.5 * cloudiness);
  }
  // Full years of whole days make the sinusoids average to zero; remove the
  // residual rounding so the mean sits on the profile value.
  const double t_err = p.mean_temp - mean_of(w.temp);
  for (auto& v : w.temp) v += t_err;
  if (p.rh_amplitude == 0.0 && p.rh_noise == 0.0) {
    w.rh.assign(n, p.mean_rh);
  } else {
    w.rh = clamp_with_mean(rh_raw, p.mean_rh);
  }
  if (p.annual_amplitude == 0.0 && p.diurnal_amplitude == 0.0 && p.temp_noise == 0.0) {
    w.temp.assign(n, p.mean_temp);
  }
  return w;
}

void OuParams::validate() const {
  if (tau < 0.0 || sigma < 0.0) throw std::invalid_argument("OU tau and sigma must be non-negative");
  if (!(dt > 0.0)) throw std::invalid_argument("OU dt must be positive");
  if (max_temp_offset < 0.0 || max_rh_offset < 0.0) throw std::invalid_argument("OU clamp must be non-negative");
}

std::vector<double> ou_path(const OuParams& p, std::size_t n, double max_offset, Rng& rng) {
  std::vector<double> x(n);
  double state = std::clamp(p.initial, -max_offset, max_offset);
  const double noise_scale = p.sigma * std::sqrt(p.dt);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = state;
    double next = state + p.tau * (p.mu - state) * p.dt;
    if (noise_scale != 0.0) next += noise_scale * rng.normal();
    state = std::clamp(next, -max_offset, max_offset);
  }
  return x;
}

WeatherSeries ou_perturb(const WeatherSeries& base, const OuParams& params, std::uint64_t episode_seed) {
  params.validate();
  Rng temp_rng(derive_seed(episode_seed, 11));
  Rng rh_rng(derive_seed(episode_seed, 12));
  const auto dt = ou_path(params, base.temp.size(), params.max_temp_offset, temp_rng);
  const auto drh = ou_path(params, base.rh.size(), params.max_rh_offset, rh_rng);
  WeatherSeries w = base;
  for (std::size_t h = 0; h < w.temp.size(); ++h) {
    w.temp[h] += dt[h];
    w.rh[h] = std::clamp(w.rh[h] + drh[h], 0.0, 100.0);
  }
  return w;
}

std::array<double, 6> forecast_at(const WeatherSeries& base, std::size_t t) {
  const std::size_t hour = t / kStepsPerHour;
  const std::size_t n = base.temp.size();
  std::array<double, 6> f{};
  const std::size_t ahead[3] = {1, 3, 6};
  for (std::size_t k = 0; k < 3; ++k) {
    const std::size_t h = (hour + ahead[k]) % n;
    f[2 * k] = base.temp[h];
    f[2 * k + 1] = base.rh[h];
  }
  return f;
}

}  // namespace fedhvac::env
