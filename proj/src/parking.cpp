#include "savsim/parking.hpp"

#include <algorithm>
#include <cmath>

namespace savsim {

std::vector<ZoneStaticEstimate> static_estimate(const std::vector<Zone>& zones,
                                                const GenerationRateTable& rates,
                                                std::int64_t registered_vehicles) {
  std::int64_t total_households = 0;
  for (const Zone& z : zones) total_households += z.households;
  if (registered_vehicles > 0 && total_households <= 0)
    throw ValidationError("static_estimate: registered vehicles but no households");

  std::vector<ZoneStaticEstimate> out;
  out.reserve(zones.size());
  for (const Zone& z : zones) {
    ZoneStaticEstimate e;
    for (int u = 0; u < kLandUseCount; ++u) e.facility_slots += rates.per_m2[u] * z.land_use_m2[u];
    if (total_households > 0)
      e.garage_slots = static_cast<double>(registered_vehicles) *
                       static_cast<double>(z.households) / static_cast<double>(total_households);
    e.static_total = e.facility_slots + e.garage_slots;
    out.push_back(e);
  }
  return out;
}

TurnoverFit fit_turnover(std::span<const double> arrivals,
                         std::span<const double> static_totals) {
  if (arrivals.size() != static_totals.size())
    throw ValidationError("fit_turnover: size mismatch");
  int nonzero = 0;
  for (double s : static_totals)
    if (s != 0.0) ++nonzero;
  if (nonzero < 2) throw ValidationError("fit_turnover: need at least 2 zones with demand");

  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < arrivals.size(); ++i) {
    sxy += static_totals[i] * arrivals[i];
    sxx += static_totals[i] * static_totals[i];
    syy += arrivals[i] * arrivals[i];
  }
  TurnoverFit fit;
  fit.slope = sxy / sxx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < arrivals.size(); ++i) {
    const double r = arrivals[i] - fit.slope * static_totals[i];
    ss_res += r * r;
  }
  fit.r_squared = syy > 0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

std::vector<std::int64_t> final_baseline_demand(std::span<const double> arrivals,
                                                double turnover) {
  if (!(turnover > 0)) throw ValidationError("final_baseline_demand: turnover must be positive");
  std::vector<std::int64_t> out;
  out.reserve(arrivals.size());
  for (double a : arrivals) out.push_back(std::llround(a * turnover));
  return out;
}

int sav_station_demand(std::span<const int> occupancy_series) {
  int m = 0;
  for (int v : occupancy_series) m = std::max(m, v);
  return m;
}

double slots_to_area_m2(double slots) {
  if (slots < 0) throw ValidationError("slots_to_area: negative slots");
  return slots * kSlotAreaM2;
}

ReductionDecomposition decompose_reduction(double baseline_total_slots, double sav_total_slots,
                                           std::int64_t fleet_size,
                                           std::int64_t registered_vehicles) {
  if (baseline_total_slots < sav_total_slots)
    throw ValidationError("decompose_reduction: baseline below SAV total");
  ReductionDecomposition d;
  d.total_reduction = baseline_total_slots - sav_total_slots;
  d.fleet_component = static_cast<double>(registered_vehicles - fleet_size);
  d.efficiency_component = d.total_reduction - d.fleet_component;
  d.efficiency_negative = d.efficiency_component < 0;
  if (d.total_reduction > 0) {
    d.fleet_share = d.fleet_component / d.total_reduction;
    d.efficiency_share = d.efficiency_component / d.total_reduction;
  }
  return d;
}

double repurposed_floor_space(double freed_area_m2, double main_use_area_m2, double far) {
  if (!(main_use_area_m2 > 0)) throw ValidationError("repurposed_floor_space: main use area <= 0");
  if (!(far > 0)) throw ValidationError("repurposed_floor_space: floor-area ratio <= 0");
  return freed_area_m2 / (main_use_area_m2 * far);
}

}  // namespace savsim
