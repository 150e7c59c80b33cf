#pragma once

#include <cstddef>

namespace fedhvac::env {

struct ZoneParams {
  double heat_capacity;  // J/K
  double ua_out;         // W/K, envelope conductance to outdoors
  double it_load;        // W, mean IT heat released into the zone

  bool operator==(const ZoneParams&) const = default;
};

/// Lumped two-zone thermal surrogate of the data center. The defaults put the
/// facility load near 100 kW with open-loop time constants of tens of hours.
struct BuildingParams {
  ZoneParams west{5e7, 500.0, 40'000.0};
  ZoneParams east{4e7, 400.0, 30'000.0};
  double ua_zone = 300.0;              // W/K between the zones
  double it_diurnal_fraction = 0.10;   // +- sinusoidal IT load modulation
  double cooling_gain = 10'000.0;      // W/K
  double cooling_capacity = 120'000.0; // W thermal
  double cooling_cop = 3.0;
  double heating_gain = 5'000.0;       // W/K
  double heating_capacity = 30'000.0;  // W thermal
  double heating_cop = 1.0;
  double fan_power = 2'000.0;          // W per zone while its system is active
  double humidity_time_constant_h = 6.0;
  double dehumidification_per_h = 2.0; // % RH per hour while cooling
  double step_seconds = 900.0;

  void validate() const;
  bool operator==(const BuildingParams&) const = default;
};

struct HvacOutput {
  double heat_flow = 0.0;    // W into the zone (negative when cooling)
  double electricity = 0.0;  // W
  bool cooling = false;
  bool heating = false;
};

/// Setpoint law for one zone. Cooling engages above the cooling setpoint;
/// heating engages below both setpoints. Cooling wins when both would apply.
HvacOutput hvac_law(double zone_temp, double cooling_sp, double heating_sp, const BuildingParams& p);

/// IT heat of one zone at env step t (diurnal sinusoid, peak mid-afternoon).
double it_load_at(const ZoneParams& zone, double diurnal_fraction, std::size_t t);

}  // namespace fedhvac::env
