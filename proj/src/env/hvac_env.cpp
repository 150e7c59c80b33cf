#include "fedhvac/env/hvac_env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fedhvac::env {
namespace {

constexpr double kMinZoneTemp = -50.0;
constexpr double kMaxZoneTemp = 80.0;

struct ZoneStep {
  double temp;
  double rh;
  double electricity;
  double it;
};

}  // namespace

void EnvConfig::validate() const {
  building.validate();
  ou.validate();
  for (std::size_t j = 0; j < kActionDim; ++j) {
    if (!(bounds.high[j] > bounds.low[j])) throw std::invalid_argument("action bounds must have high > low");
  }
}

HvacEnv::HvacEnv(const ClimateProfile& climate, std::uint64_t base_seed, EnvConfig config)
    : HvacEnv(climate.name, synth_base_weather(climate, base_seed), std::move(config)) {}

HvacEnv::HvacEnv(std::string name, WeatherSeries base, EnvConfig config)
    : name_(std::move(name)), config_(std::move(config)), base_(std::move(base)) {
  config_.validate();
  base_.validate();
  weather_ = base_;
  state_.t = kEpisodeSteps;
}

Observation HvacEnv::reset(std::uint64_t episode_seed) {
  weather_ = ou_perturb(base_, config_.ou, episode_seed);
  state_ = BuildingState{};
  state_.t_west = state_.t_east = config_.initial_temp;
  state_.rh_west = state_.rh_east = config_.initial_rh;
  started_ = true;
  return observe();
}

void HvacEnv::force_zone_temps(double t_west, double t_east) {
  state_.t_west = t_west;
  state_.t_east = t_east;
}

Observation HvacEnv::observe() const {
  const std::size_t hour = (state_.t / kStepsPerHour) % kHoursPerYear;
  Observation o;
  o.reserve(obs_dim());
  o.push_back(weather_.temp[hour]);
  o.push_back(weather_.rh[hour]);
  o.push_back(weather_.wind_speed[hour]);
  o.push_back(weather_.wind_dir[hour]);
  o.push_back(weather_.diffuse_solar[hour]);
  o.push_back(weather_.direct_solar[hour]);
  o.push_back(state_.t_west);
  o.push_back(state_.rh_west);
  o.push_back(state_.t_east);
  o.push_back(state_.rh_east);
  o.push_back(state_.p_hvac);
  o.push_back(state_.p_it);
  for (double f : forecast_at(base_, state_.t % kEpisodeSteps)) o.push_back(f);
  if (config_.time_features) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const double steps_per_day = 24.0 * kStepsPerHour;
    const double day_frac = static_cast<double>(state_.t % (24 * kStepsPerHour)) / steps_per_day;
    const double year_frac = static_cast<double>(state_.t) / static_cast<double>(kEpisodeSteps);
    o.push_back(std::sin(two_pi * day_frac));
    o.push_back(std::cos(two_pi * day_frac));
    o.push_back(std::sin(two_pi * year_frac));
    o.push_back(std::cos(two_pi * year_frac));
  }
  return o;
}

StepResult HvacEnv::step(const ActionVector& raw_action) {
  if (!started_) throw EnvError("step() called before reset()");
  if (done()) throw EnvError("step() called after the episode finished");

  const auto& b = config_.building;
  ActionVector a;
  for (std::size_t j = 0; j < kActionDim; ++j) {
    a[j] = std::clamp(raw_action[j], config_.bounds.low[j], config_.bounds.high[j]);
  }

  const std::size_t hour = state_.t / kStepsPerHour;
  const double t_out = weather_.temp[hour];
  const double rh_out = weather_.rh[hour];
  const double dt = b.step_seconds;
  const double rh_rate = dt / 3600.0 / b.humidity_time_constant_h;

  auto advance = [&](const ZoneParams& zone, double temp, double rh, double other_temp, double csp,
                     double hsp) {
    const HvacOutput hvac = hvac_law(temp, csp, hsp, b);
    const double it = it_load_at(zone, b.it_diurnal_fraction, state_.t);
    const double flux = zone.ua_out * (t_out - temp) + b.ua_zone * (other_temp - temp) + it + hvac.heat_flow;
    ZoneStep s;
    s.temp = std::clamp(temp + dt / zone.heat_capacity * flux, kMinZoneTemp, kMaxZoneTemp);
    double next_rh = rh + rh_rate * (rh_out - rh);
    if (hvac.cooling) next_rh -= b.dehumidification_per_h * dt / 3600.0;
    s.rh = std::clamp(next_rh, 0.0, 100.0);
    s.electricity = hvac.electricity;
    s.it = it;
    return s;
  };

  const ZoneStep west = advance(b.west, state_.t_west, state_.rh_west, state_.t_east, a[0], a[1]);
  const ZoneStep east = advance(b.east, state_.t_east, state_.rh_east, state_.t_west, a[2], a[3]);

  state_.t_west = west.temp;
  state_.t_east = east.temp;
  state_.rh_west = west.rh;
  state_.rh_east = east.rh;
  state_.p_it = west.it + east.it;
  state_.p_hvac = west.electricity + east.electricity;
  ++state_.t;

  StepResult r;
  const auto& rp = config_.reward;
  r.reward = total_reward(comfort_reward(west.temp, rp), comfort_reward(east.temp, rp), state_.p_it,
                          state_.p_hvac, rp);
  r.done = done();
  r.info.p_it = state_.p_it;
  r.info.p_hvac = state_.p_hvac;
  r.info.p_hvac_west = west.electricity;
  r.info.p_hvac_east = east.electricity;
  r.info.t_west = west.temp;
  r.info.t_east = east.temp;
  r.info.t_out = t_out;
  r.info.violation = comfort_violated(west.temp, rp) || comfort_violated(east.temp, rp);
  r.obs = observe();
  return r;
}

ActionVector to_action(const std::vector<double>& v) {
  if (v.size() != kActionDim) throw std::invalid_argument("action must have 4 entries");
  return {v[0], v[1], v[2], v[3]};
}

TraceWriter::TraceWriter(const std::filesystem::path& path) : out_(path) {
  if (!out_) throw std::runtime_error("cannot open trace file " + path.string());
  out_ << "step,T_west,T_east,T_out,P_it,P_hvac,reward,violation\n";
  out_.precision(17);
}

void TraceWriter::write(std::size_t step, const StepResult& r) {
  out_ << step << ',' << r.info.t_west << ',' << r.info.t_east << ',' << r.info.t_out << ',' << r.info.p_it << ','
       << r.info.p_hvac << ',' << r.reward << ',' << (r.info.violation ? 1 : 0) << '\n';
}

}  // namespace fedhvac::env
