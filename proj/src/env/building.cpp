#include "fedhvac/env/building.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "fedhvac/env/weather.hpp"

namespace fedhvac::env {

void BuildingParams::validate() const {
  const double positives[] = {west.heat_capacity, east.heat_capacity, west.ua_out, east.ua_out, ua_zone,
                              cooling_gain, cooling_capacity, cooling_cop, heating_gain, heating_capacity,
                              heating_cop, humidity_time_constant_h, step_seconds};
  for (double v : positives) {
    if (!(v > 0.0)) throw std::invalid_argument("building parameters must be positive");
  }
  if (west.it_load < 0.0 || east.it_load < 0.0 || fan_power < 0.0 || dehumidification_per_h < 0.0 ||
      it_diurnal_fraction < 0.0 || it_diurnal_fraction >= 1.0) {
    throw std::invalid_argument("building loads must be non-negative");
  }
}

HvacOutput hvac_law(double zone_temp, double cooling_sp, double heating_sp, const BuildingParams& p) {
  HvacOutput out;
  if (zone_temp > cooling_sp) {
    const double q = std::min(p.cooling_capacity, p.cooling_gain * (zone_temp - cooling_sp));
    out.heat_flow = -q;
    out.electricity = q / p.cooling_cop + p.fan_power;
    out.cooling = true;
  } else if (zone_temp < heating_sp && zone_temp < cooling_sp) {
    const double q = std::min(p.heating_capacity, p.heating_gain * (heating_sp - zone_temp));
    out.heat_flow = q;
    out.electricity = q / p.heating_cop + p.fan_power;
    out.heating = true;
  }
  return out;
}

double it_load_at(const ZoneParams& zone, double diurnal_fraction, std::size_t t) {
  const double hour_of_day = static_cast<double>(t % (24 * kStepsPerHour)) / static_cast<double>(kStepsPerHour);
  return zone.it_load * (1.0 + diurnal_fraction * std::sin(2.0 * std::numbers::pi * (hour_of_day - 8.0) / 24.0));
}

}  // namespace fedhvac::env
