#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "savsim/flow.hpp"
#include "savsim/network.hpp"

namespace savsim {

struct ZoneMetrics {
  double vkt{};               // veh*km, all traversals
  double delay_h{};           // veh*h, per-traversal delay clamped at zero
  double free_flow_h{};       // veh*h
  double travel_h{};          // veh*h experienced
  double avg_speed_kmh{};     // vkt / travel_h
  double delay_ratio{};       // delay / free-flow
  double empty_vkt{};         // empty-run share of vkt
  double empty_delay_h{};
  std::int64_t traversals{};
};

// Aggregates traversal events into per-zone metrics. A traversal belongs to
// the window containing its exit event. Exits without a matching entry are
// fatal; entries still open at the end of the log are vehicles in flight and
// are skipped.
std::vector<ZoneMetrics> zone_metrics(std::span<const TraversalEvent> events, const Network& net,
                                      double window_start_s, double window_end_s);

struct NetworkTotals {
  double vkt{};
  double delay_h{};
  double free_flow_h{};
  double travel_h{};
  double avg_speed_kmh{};
  double empty_vkt{};
};

NetworkTotals network_totals(std::span<const ZoneMetrics> zones);

struct ZoneDiff {
  ExtId zone_id{};
  double d_parking_slots{};
  double d_vkt{};
  double d_delay_h{};
  double d_speed_kmh{};
};

// Per-zone SAV minus baseline. Zone systems must match.
std::vector<ZoneDiff> scenario_diff(std::span<const ZoneMetrics> sav,
                                    std::span<const double> sav_parking,
                                    std::span<const ZoneMetrics> baseline,
                                    std::span<const double> baseline_parking,
                                    const Network& net);

// Average ranks (ties get the mean rank).
std::vector<double> average_ranks(std::span<const double> values);

// Spearman's rank correlation; nullopt when either rank vector has zero
// variance. Requires at least 3 observations.
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

// "+14.9%" / "-9.2%" style formatting used in the totals tables.
std::string format_pct_change(double sav_value, double baseline_value);

struct DesireLine {
  ExtId from_zone{};
  ExtId to_zone{};
  std::string kind;  // "pickup" | "relocation"
  std::int64_t volume{};
};

std::string desire_lines_geojson(std::span<const DesireLine> lines, const Network& net);

}  // namespace savsim
