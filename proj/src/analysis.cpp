#include "savsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include <json.hpp>

namespace savsim {

std::vector<ZoneMetrics> zone_metrics(std::span<const TraversalEvent> events, const Network& net,
                                      double window_start_s, double window_end_s) {
  std::vector<ZoneMetrics> zm(net.zone_count());
  // Open traversals per (vehicle, link).
  std::map<std::pair<VehicleId, ExtId>, std::pair<double, bool>> open;
  for (const TraversalEvent& ev : events) {
    const auto key = std::make_pair(ev.vehicle, ev.link);
    if (!ev.is_exit) {
      if (open.count(key))
        throw InvariantViolation("duplicate enter without exit: vehicle " +
                                 std::to_string(ev.vehicle) + " link " + std::to_string(ev.link));
      open[key] = {ev.time_s, ev.is_empty_run};
      continue;
    }
    auto it = open.find(key);
    if (it == open.end())
      throw InvariantViolation("exit without enter: vehicle " + std::to_string(ev.vehicle) +
                               " link " + std::to_string(ev.link));
    const auto [entry_s, entry_empty] = it->second;
    open.erase(it);
    if (entry_empty != ev.is_empty_run)
      throw InvariantViolation("empty-run flag changed mid-traversal");
    if (ev.time_s < window_start_s || ev.time_s >= window_end_s) continue;

    const LinkIdx l = net.link_index(ev.link);
    ZoneMetrics& z = zm[net.zone_of_link(l)];
    const double dist_km = net.link(l).length_m / 1000.0;
    const double travel_s = ev.time_s - entry_s;
    const double fft_s = net.free_flow_time_s(l);
    const double delay_s = std::max(0.0, travel_s - fft_s);
    z.vkt += dist_km;
    z.travel_h += travel_s / 3600.0;
    z.free_flow_h += fft_s / 3600.0;
    z.delay_h += delay_s / 3600.0;
    ++z.traversals;
    if (ev.is_empty_run) {
      z.empty_vkt += dist_km;
      z.empty_delay_h += delay_s / 3600.0;
    }
  }
  for (ZoneMetrics& z : zm) {
    z.avg_speed_kmh = z.travel_h > 0 ? z.vkt / z.travel_h : 0.0;
    z.delay_ratio = z.free_flow_h > 0 ? z.delay_h / z.free_flow_h : 0.0;
  }
  return zm;
}

NetworkTotals network_totals(std::span<const ZoneMetrics> zones) {
  NetworkTotals t;
  for (const ZoneMetrics& z : zones) {
    t.vkt += z.vkt;
    t.delay_h += z.delay_h;
    t.free_flow_h += z.free_flow_h;
    t.travel_h += z.travel_h;
    t.empty_vkt += z.empty_vkt;
  }
  t.avg_speed_kmh = t.travel_h > 0 ? t.vkt / t.travel_h : 0.0;
  return t;
}

std::vector<ZoneDiff> scenario_diff(std::span<const ZoneMetrics> sav,
                                    std::span<const double> sav_parking,
                                    std::span<const ZoneMetrics> baseline,
                                    std::span<const double> baseline_parking,
                                    const Network& net) {
  const auto zc = static_cast<std::size_t>(net.zone_count());
  if (sav.size() != zc || baseline.size() != zc || sav_parking.size() != zc ||
      baseline_parking.size() != zc)
    throw ValidationError("scenario_diff: zone systems do not match");
  std::vector<ZoneDiff> out(zc);
  for (std::size_t z = 0; z < zc; ++z) {
    out[z].zone_id = net.zone(static_cast<ZoneIdx>(z)).id;
    out[z].d_parking_slots = sav_parking[z] - baseline_parking[z];
    out[z].d_vkt = sav[z].vkt - baseline[z].vkt;
    out[z].d_delay_h = sav[z].delay_h - baseline[z].delay_h;
    out[z].d_speed_kmh = sav[z].avg_speed_kmh - baseline[z].avg_speed_kmh;
  }
  return out;
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&values](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double mean_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("spearman: size mismatch");
  if (x.size() < 3) throw ValidationError("spearman: need at least 3 observations");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

std::string format_pct_change(double sav_value, double baseline_value) {
  if (baseline_value == 0.0) return "(n/a)";
  const double pct = (sav_value - baseline_value) / baseline_value * 100.0;
  char buf[48];
  std::snprintf(buf, sizeof buf, "(%+.1f%%)", pct);
  return buf;
}

std::string desire_lines_geojson(std::span<const DesireLine> lines, const Network& net) {
  nlohmann::json geo;
  geo["type"] = "FeatureCollection";
  geo["features"] = nlohmann::json::array();
  for (const DesireLine& dl : lines) {
    const Node& a = net.node(net.station_node_idx(net.zone_index(dl.from_zone)));
    const Node& b = net.node(net.station_node_idx(net.zone_index(dl.to_zone)));
    nlohmann::json f;
    f["type"] = "Feature";
    f["geometry"]["type"] = "LineString";
    f["geometry"]["coordinates"] = {{a.x, a.y}, {b.x, b.y}};
    f["properties"]["from_zone"] = dl.from_zone;
    f["properties"]["to_zone"] = dl.to_zone;
    f["properties"]["kind"] = dl.kind;
    f["properties"]["volume"] = dl.volume;
    geo["features"].push_back(std::move(f));
  }
  return geo.dump(2) + "\n";
}

}  // namespace savsim
