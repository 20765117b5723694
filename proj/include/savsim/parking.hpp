#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "savsim/network.hpp"

namespace savsim {

inline constexpr double kSlotAreaM2 = 30.0;  // 2.5 m x 6 m slot + clearance

// Parking generation rates, vehicles per m2 of land use.
struct GenerationRateTable {
  std::array<double, kLandUseCount> per_m2{};

  static GenerationRateTable defaults() {
    GenerationRateTable t;
    t.per_m2[static_cast<int>(LandUse::office)] = 0.005;
    t.per_m2[static_cast<int>(LandUse::commerce)] = 0.0067;
    t.per_m2[static_cast<int>(LandUse::residence)] = 0.0;
    t.per_m2[static_cast<int>(LandUse::industry)] = 0.0011;
    t.per_m2[static_cast<int>(LandUse::park)] = 0.0;
    t.per_m2[static_cast<int>(LandUse::transport)] = 0.0005;
    t.per_m2[static_cast<int>(LandUse::nature)] = 0.0;
    return t;
  }
};

struct ZoneStaticEstimate {
  double facility_slots{};
  double garage_slots{};
  double static_total{};
};

// Facility slots from land use x rates; garage slots from the proportional
// allocation of registered vehicles by household count.
std::vector<ZoneStaticEstimate> static_estimate(const std::vector<Zone>& zones,
                                                const GenerationRateTable& rates,
                                                std::int64_t registered_vehicles);

struct TurnoverFit {
  double slope{};
  double r_squared{};
};

// Least-squares slope through the origin of arrivals on static totals; the
// slope is the average turnover rate. R^2 is the uncentered coefficient of
// determination (an intercept has no meaning for zero-arrival zones).
TurnoverFit fit_turnover(std::span<const double> arrivals, std::span<const double> static_totals);

// final slots = round(arrivals x turnover), per zone.
std::vector<std::int64_t> final_baseline_demand(std::span<const double> arrivals, double turnover);

// Maximum simultaneous occupancy over the recorded window; empty series -> 0.
int sav_station_demand(std::span<const int> occupancy_series);

double slots_to_area_m2(double slots);

struct ReductionDecomposition {
  double total_reduction{};
  double fleet_component{};       // registered - fleet, one slot per vehicle
  double efficiency_component{};  // remainder
  double fleet_share{};
  double efficiency_share{};
  bool efficiency_negative{};     // flagged when fleet component exceeds total
};

ReductionDecomposition decompose_reduction(double baseline_total_slots, double sav_total_slots,
                                           std::int64_t fleet_size,
                                           std::int64_t registered_vehicles);

// Freed parking area expressed as a fraction of the current floor space of
// the zone's main use (area x average floor-area ratio).
double repurposed_floor_space(double freed_area_m2, double main_use_area_m2, double far);

}  // namespace savsim
