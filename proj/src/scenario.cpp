#include "savsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "savsim/routing.hpp"

namespace savsim {

using nlohmann::json;

namespace {

bool is_multiple(double value, double base) {
  const double q = value / base;
  return std::abs(q - std::round(q)) < 1e-9;
}

std::int64_t to_steps(double seconds, double dt) {
  return static_cast<std::int64_t>(std::llround(seconds / dt));
}

}  // namespace

void ScenarioConfig::validate() const {
  if (!(dt_s > 0)) throw ConfigError("dt_s must be positive");
  for (auto [name, v] : {std::pair<const char*, double>{"matching_period_s", matching_period_s},
                         {"relocation_period_s", relocation_period_s},
                         {"tt_refresh_period_s", tt_refresh_period_s}}) {
    if (!(v > 0) || !is_multiple(v, dt_s))
      throw ConfigError(std::string(name) + " must be a positive multiple of dt_s");
  }
  if (!is_multiple(start_s, dt_s) || !is_multiple(horizon(), dt_s))
    throw ConfigError("start_s and horizon_s must be multiples of dt_s");
  if (!(threshold_low < threshold_high))
    throw ConfigError("threshold_low must be below threshold_high");
  if (report_start_s < start_s || report_end_s > horizon() || report_start_s >= report_end_s)
    throw ConfigError("reporting window must lie within [start_s, horizon_s]");
  if (k_routes < 1) throw ConfigError("k_routes must be >= 1");
  if (logit_theta < 0) throw ConfigError("logit_theta must be non-negative");
  if (max_wait_s < 0) throw ConfigError("max_wait_s must be non-negative");
  if (scenario == ScenarioKind::sav && fleet_size <= 0)
    throw ConfigError("sav scenario requires fleet_size > 0");
  if (fleet_size < 0 || registered_vehicles < 0)
    throw ConfigError("fleet_size and registered_vehicles must be non-negative");
  if (relocation_radius < 1) throw ConfigError("relocation_radius must be >= 1");
  if (dwell_s < 0 || !is_multiple(dwell_s, dt_s))
    throw ConfigError("dwell_s must be a non-negative multiple of dt_s");
}

ScenarioConfig ScenarioConfig::from_kv(const std::map<std::string, std::string>& kv) {
  ScenarioConfig c;
  auto leftover = kv;
  auto take = [&leftover](const char* key) -> std::optional<std::string> {
    auto it = leftover.find(key);
    if (it == leftover.end()) return std::nullopt;
    std::string v = it->second;
    leftover.erase(it);
    return v;
  };
  auto num = [](const std::string& v, const char* key) {
    try {
      std::size_t pos{};
      const double d = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw ConfigError(std::string("bad number for ") + key + ": '" + v + "'");
    }
  };

  if (auto v = take("scenario")) {
    if (*v == "baseline") c.scenario = ScenarioKind::baseline;
    else if (*v == "sav") c.scenario = ScenarioKind::sav;
    else throw ConfigError("scenario must be 'baseline' or 'sav'");
  }
  if (auto v = take("fleet_size")) c.fleet_size = static_cast<std::int64_t>(num(*v, "fleet_size"));
  if (auto v = take("registered_vehicles"))
    c.registered_vehicles = static_cast<std::int64_t>(num(*v, "registered_vehicles"));
  if (auto v = take("max_wait_s")) c.max_wait_s = num(*v, "max_wait_s");
  if (auto v = take("matching_period_s")) c.matching_period_s = num(*v, "matching_period_s");
  if (auto v = take("relocation_period_s")) c.relocation_period_s = num(*v, "relocation_period_s");
  if (auto v = take("tt_refresh_period_s")) c.tt_refresh_period_s = num(*v, "tt_refresh_period_s");
  if (auto v = take("threshold_low")) c.threshold_low = num(*v, "threshold_low");
  if (auto v = take("threshold_high")) c.threshold_high = num(*v, "threshold_high");
  if (auto v = take("logit_theta")) c.logit_theta = num(*v, "logit_theta");
  if (auto v = take("k_routes")) c.k_routes = static_cast<int>(num(*v, "k_routes"));
  if (auto v = take("dt_s")) c.dt_s = num(*v, "dt_s");
  if (auto v = take("start_s")) c.start_s = num(*v, "start_s");
  if (auto v = take("report_start_s")) c.report_start_s = num(*v, "report_start_s");
  if (auto v = take("report_end_s")) c.report_end_s = num(*v, "report_end_s");
  if (auto v = take("horizon_s")) c.horizon_s = num(*v, "horizon_s");
  if (auto v = take("seed")) c.seed = static_cast<std::uint64_t>(num(*v, "seed"));
  if (auto v = take("vot_weight")) c.vot_weight = num(*v, "vot_weight");
  if (auto v = take("relocation_radius"))
    c.relocation_radius = static_cast<int>(num(*v, "relocation_radius"));
  if (auto v = take("dwell_s")) c.dwell_s = num(*v, "dwell_s");
  if (auto v = take("event_log_format")) {
    if (*v == "binary") c.binary_events = true;
    else if (*v == "csv") c.binary_events = false;
    else throw ConfigError("event_log_format must be 'csv' or 'binary'");
  }
  if (!leftover.empty())
    throw ConfigError("unknown config key '" + leftover.begin()->first + "'");
  c.validate();
  return c;
}

ScenarioConfig ScenarioConfig::from_file(const fs::path& path) {
  return from_kv(read_kv_file(path));
}

std::map<std::string, std::string> ScenarioConfig::to_kv() const {
  std::map<std::string, std::string> kv;
  kv["scenario"] = scenario == ScenarioKind::sav ? "sav" : "baseline";
  kv["fleet_size"] = std::to_string(fleet_size);
  kv["registered_vehicles"] = std::to_string(registered_vehicles);
  kv["max_wait_s"] = fmt_fixed(max_wait_s, 1);
  kv["matching_period_s"] = fmt_fixed(matching_period_s, 1);
  kv["relocation_period_s"] = fmt_fixed(relocation_period_s, 1);
  kv["tt_refresh_period_s"] = fmt_fixed(tt_refresh_period_s, 1);
  kv["threshold_low"] = fmt_fixed(threshold_low, 3);
  kv["threshold_high"] = fmt_fixed(threshold_high, 3);
  kv["logit_theta"] = fmt_fixed(logit_theta, 6);
  kv["k_routes"] = std::to_string(k_routes);
  kv["dt_s"] = fmt_fixed(dt_s, 3);
  kv["start_s"] = fmt_fixed(start_s, 1);
  kv["report_start_s"] = fmt_fixed(report_start_s, 1);
  kv["report_end_s"] = fmt_fixed(report_end_s, 1);
  kv["horizon_s"] = fmt_fixed(horizon(), 1);
  kv["seed"] = std::to_string(seed);
  kv["vot_weight"] = fmt_fixed(vot_weight, 6);
  kv["relocation_radius"] = std::to_string(relocation_radius);
  kv["dwell_s"] = fmt_fixed(dwell_s, 1);
  kv["event_log_format"] = binary_events ? "binary" : "csv";
  return kv;
}

SimulationInputs load_inputs(const fs::path& network_dir, const fs::path& od_path,
                             const std::optional<fs::path>& coefficients_path,
                             bool od_is_daily) {
  const fs::path nodes_p = network_dir / "nodes.csv";
  const fs::path links_p = network_dir / "links.csv";
  const fs::path zones_p = network_dir / "zones.json";

  auto nodes = read_nodes_csv(nodes_p);
  auto links = read_links_csv(links_p);
  auto zones = read_zones_json(zones_p);
  Network net = Network::build(std::move(nodes), std::move(links), std::move(zones));

  std::vector<fs::path> sources{nodes_p, links_p, zones_p, od_path};
  std::optional<OdMatrix> od;
  if (od_is_daily) {
    if (!coefficients_path)
      throw ConfigError("daily OD input requires a time_coefficients.csv file");
    auto daily = read_daily_od_csv(od_path, net);
    auto coef = read_time_coefficients_csv(*coefficients_path);
    sources.push_back(*coefficients_path);
    od = OdMatrix::expand_daily_to_hourly(net.zone_count(), daily, coef);
  } else {
    od = OdMatrix(net.zone_count(), read_od_csv(od_path, net));
  }

  SimulationInputs in{std::move(net), std::move(*od), hash_files(sources), sources};
  return in;
}

namespace {

// A zone with an unreachable station is only fatal when it has demand.
void check_station_reachability(const SimulationInputs& in) {
  for (ZoneIdx z : in.net.unreachable_stations()) {
    double demand = 0.0;
    for (int h = 0; h < kHoursPerDay; ++h) demand += in.od.generation(h, z);
    demand += in.od.arrivals_into(z, 0, kHoursPerDay);
    if (demand > 0)
      throw ValidationError("zone " + std::to_string(in.net.zone(z).id) +
                            ": station unreachable but zone has demand");
  }
}

WaitStats wait_stats_from_requests(const std::vector<TripRequest>& requests,
                                   const ScenarioConfig& cfg) {
  WaitStats w;
  std::vector<double> waits;
  for (const TripRequest& r : requests) {
    if (r.generation_s < cfg.report_start_s || r.generation_s >= cfg.report_end_s) continue;
    ++w.emitted;
    switch (r.state) {
      case RequestState::completed:
        ++w.completed;
        ++w.served;
        break;
      case RequestState::riding:
        ++w.served;
        ++w.in_progress_end;
        break;
      case RequestState::assigned:
        ++w.in_progress_end;
        break;
      case RequestState::waitlisted:
      case RequestState::unassigned:
        ++w.waitlisted_end;
        break;
    }
    if (r.pickup_s >= 0) waits.push_back(r.pickup_s - r.generation_s);
  }
  if (!waits.empty()) {
    std::sort(waits.begin(), waits.end());
    const double sum = std::accumulate(waits.begin(), waits.end(), 0.0);
    w.mean_wait_s = sum / static_cast<double>(waits.size());
    auto pct = [&waits](double p) {
      const auto n = waits.size();
      const auto idx = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n))) - 1;
      return waits[std::min(idx, n - 1)];
    };
    w.p50_wait_s = pct(0.50);
    w.p90_wait_s = pct(0.90);
    w.p95_wait_s = pct(0.95);
    w.max_wait_s = waits.back();
  }
  return w;
}

void fill_odometers(std::vector<Vehicle>& fleet, std::span<const TraversalEvent> events,
                    const Network& net) {
  for (const TraversalEvent& e : events) {
    if (e.is_exit) continue;
    if (e.vehicle < 0 || e.vehicle >= static_cast<VehicleId>(fleet.size())) continue;
    const double km = net.link(net.link_index(e.link)).length_m / 1000.0;
    fleet[e.vehicle].odometer_km += km;
    if (e.is_empty_run) fleet[e.vehicle].empty_km += km;
  }
}

// Baseline parking pipeline from land use, households and window arrivals.
void baseline_parking(RunResult& res, const SimulationInputs& in, const ScenarioConfig& cfg) {
  std::vector<Zone> zones;
  zones.reserve(in.net.zone_count());
  for (ZoneIdx z = 0; z < in.net.zone_count(); ++z) zones.push_back(in.net.zone(z));
  res.statics = static_estimate(zones, GenerationRateTable::defaults(), cfg.registered_vehicles);
  res.arrivals.resize(in.net.zone_count());
  for (ZoneIdx z = 0; z < in.net.zone_count(); ++z)
    res.arrivals[z] = in.od.expected_arrivals(z, cfg.report_start_s, cfg.report_end_s);

  const double total_arrivals = std::accumulate(res.arrivals.begin(), res.arrivals.end(), 0.0);
  if (total_arrivals > 0) {
    std::vector<double> statics(in.net.zone_count());
    for (ZoneIdx z = 0; z < in.net.zone_count(); ++z) statics[z] = res.statics[z].static_total;
    res.turnover = fit_turnover(res.arrivals, statics);
    res.turnover_fitted = true;
    res.baseline_slots = final_baseline_demand(res.arrivals, res.turnover.slope);
  } else {
    res.baseline_slots.assign(in.net.zone_count(), 0);
  }
}

}  // namespace

RunResult run_baseline(const SimulationInputs& in, const ScenarioConfig& cfg) {
  cfg.validate();
  check_station_reachability(in);

  RunResult res;
  res.cfg = cfg;
  res.input_hash = in.input_hash;

  Rng rng(cfg.seed);
  FlowModel flow(in.net, cfg.dt_s);
  TravelTimeTable table = TravelTimeTable::free_flow(in.net);
  RequestStream stream(in.od, cfg.matching_period_s);
  std::vector<TripRequest> requests;

  const std::int64_t start = to_steps(cfg.start_s, cfg.dt_s);
  const std::int64_t end = to_steps(cfg.horizon(), cfg.dt_s);
  const std::int64_t match_steps = to_steps(cfg.matching_period_s, cfg.dt_s);
  const std::int64_t refresh_steps = to_steps(cfg.tt_refresh_period_s, cfg.dt_s);

  for (std::int64_t s = start; s < end; ++s) {
    const double t = static_cast<double>(s) * cfg.dt_s;
    if (s % refresh_steps == 0 && s != start) flow.refresh_travel_times(table);
    if (s % match_steps == 0) {
      for (TripRequest& r : stream.emit(t)) {
        // Every trip departs as an independent private vehicle right away.
        r.state = RequestState::riding;
        r.assignment_s = t;
        r.pickup_s = t;
        const NodeIdx o = in.net.station_node_idx(r.origin);
        const NodeIdx d = in.net.station_node_idx(r.dest);
        if (o == d) {
          r.state = RequestState::completed;
          r.arrival_s = t;
        } else {
          auto routes = k_shortest_routes(in.net, table, o, d, cfg.k_routes, cfg.vot_weight);
          if (routes.empty())
            throw ValidationError("no route for trip " + std::to_string(r.id));
          std::vector<double> costs(routes.size());
          for (std::size_t i = 0; i < routes.size(); ++i) costs[i] = routes[i].cost;
          const int pick = logit_choice(costs, cfg.logit_theta, rng);
          flow.add_departure(static_cast<VehicleId>(r.id), routes[pick].links, t,
                             /*empty_run=*/false);
        }
        requests.push_back(r);
      }
    }
    for (const Arrival& a : flow.advance()) {
      TripRequest& r = requests[a.vehicle];
      r.state = RequestState::completed;
      r.arrival_s = a.time_s;
    }
  }

  res.events = flow.events();
  res.zones = zone_metrics(res.events, in.net, cfg.report_start_s, cfg.report_end_s);
  res.totals = network_totals(res.zones);
  res.waits = wait_stats_from_requests(requests, cfg);
  baseline_parking(res, in, cfg);
  return res;
}

RunResult run_sav(const SimulationInputs& in, const ScenarioConfig& cfg) {
  cfg.validate();
  check_station_reachability(in);

  RunResult res;
  res.cfg = cfg;
  res.input_hash = in.input_hash;

  Rng rng(cfg.seed);
  FlowModel flow(in.net, cfg.dt_s);
  TravelTimeTable table = TravelTimeTable::free_flow(in.net);
  RequestStream stream(in.od, cfg.matching_period_s);

  DispatchConfig dcfg;
  dcfg.max_wait_s = cfg.max_wait_s;
  dcfg.matching_period_s = cfg.matching_period_s;
  dcfg.relocation_period_s = cfg.relocation_period_s;
  dcfg.thresholds = {cfg.threshold_low, cfg.threshold_high};
  dcfg.relocation_radius = cfg.relocation_radius;
  dcfg.logit_theta = cfg.logit_theta;
  dcfg.k_routes = cfg.k_routes;
  dcfg.vot_weight = cfg.vot_weight;
  dcfg.dwell_s = cfg.dwell_s;
  dcfg.report_start_s = cfg.report_start_s;
  dcfg.report_end_s = cfg.report_end_s;
  Dispatcher dispatcher(in.net, in.od, flow, dcfg, rng);
  dispatcher.init_fleet(cfg.fleet_size);

  const std::int64_t start = to_steps(cfg.start_s, cfg.dt_s);
  const std::int64_t end = to_steps(cfg.horizon(), cfg.dt_s);
  const std::int64_t match_steps = to_steps(cfg.matching_period_s, cfg.dt_s);
  const std::int64_t reloc_steps = to_steps(cfg.relocation_period_s, cfg.dt_s);
  const std::int64_t refresh_steps = to_steps(cfg.tt_refresh_period_s, cfg.dt_s);

  for (std::int64_t s = start; s < end; ++s) {
    const double t = static_cast<double>(s) * cfg.dt_s;
    if (s % refresh_steps == 0 && s != start) flow.refresh_travel_times(table);
    if (s % match_steps == 0) {
      dispatcher.handle_new_requests(stream.emit(t));
      dispatcher.matching_tick(t, table);
    }
    if (s % reloc_steps == 0) dispatcher.relocation_tick(t, table);
    for (const Arrival& a : flow.advance()) dispatcher.on_arrival(a.vehicle, a.time_s, table);
    dispatcher.sample_station_occupancy(t);
  }

  res.events = flow.events();
  res.zones = zone_metrics(res.events, in.net, cfg.report_start_s, cfg.report_end_s);
  res.totals = network_totals(res.zones);
  res.waits = wait_stats_from_requests(dispatcher.requests(), cfg);
  res.station_max.resize(in.net.zone_count());
  for (ZoneIdx z = 0; z < in.net.zone_count(); ++z)
    res.station_max[z] = sav_station_demand(dispatcher.station_series()[z]);
  res.dispatch_log = dispatcher.log();
  res.waitlist_series = dispatcher.waitlist_series();
  res.balance_reports = dispatcher.balance_reports();
  res.fleet = dispatcher.vehicles();
  fill_odometers(res.fleet, res.events, in.net);
  return res;
}

RunResult run_scenario(const SimulationInputs& in, const ScenarioConfig& cfg) {
  return cfg.scenario == ScenarioKind::sav ? run_sav(in, cfg) : run_baseline(in, cfg);
}

LandUse dominant_land_use(const Zone& z) {
  int best = 0;
  for (int u = 1; u < kLandUseCount; ++u)
    if (z.land_use_m2[u] > z.land_use_m2[best]) best = u;
  return static_cast<LandUse>(best);
}

namespace {

void write_metrics_csv(const fs::path& path, const RunResult& r, const Network& net) {
  std::ostringstream os;
  os << "zone_id,vkt,delay_h,free_flow_h,travel_h,avg_speed_kmh,delay_ratio,empty_vkt,"
        "empty_delay_h,traversals\n";
  for (ZoneIdx z = 0; z < net.zone_count(); ++z) {
    const ZoneMetrics& m = r.zones[z];
    os << net.zone(z).id << ',' << fmt_fixed(m.vkt, 6) << ',' << fmt_fixed(m.delay_h, 6) << ','
       << fmt_fixed(m.free_flow_h, 6) << ',' << fmt_fixed(m.travel_h, 6) << ','
       << fmt_fixed(m.avg_speed_kmh, 4) << ',' << fmt_fixed(m.delay_ratio, 6) << ','
       << fmt_fixed(m.empty_vkt, 6) << ',' << fmt_fixed(m.empty_delay_h, 6) << ','
       << m.traversals << '\n';
  }
  write_file(path, os.str());
}

void write_parking_csv(const fs::path& path, const RunResult& r, const Network& net) {
  std::ostringstream os;
  os << "zone_id,facility_slots,garage_slots,static_total,arrivals,final_slots,area_m2\n";
  for (ZoneIdx z = 0; z < net.zone_count(); ++z) {
    os << net.zone(z).id << ',' << fmt_fixed(r.statics[z].facility_slots, 3) << ','
       << fmt_fixed(r.statics[z].garage_slots, 3) << ',' << fmt_fixed(r.statics[z].static_total, 3)
       << ',' << fmt_fixed(r.arrivals[z], 3) << ',' << r.baseline_slots[z] << ','
       << fmt_fixed(slots_to_area_m2(static_cast<double>(r.baseline_slots[z])), 1) << '\n';
  }
  write_file(path, os.str());
}

void write_stations_csv(const fs::path& path, const RunResult& r, const Network& net) {
  std::ostringstream os;
  os << "zone_id,max_occupancy,area_m2\n";
  for (ZoneIdx z = 0; z < net.zone_count(); ++z) {
    os << net.zone(z).id << ',' << r.station_max[z] << ','
       << fmt_fixed(slots_to_area_m2(r.station_max[z]), 1) << '\n';
  }
  write_file(path, os.str());
}

void write_dispatch_csv(const fs::path& path, const RunResult& r) {
  std::ostringstream os;
  os << "time_s,event,vehicle_id,request_id,origin_zone,dest_zone,eta_s\n";
  for (const DispatchLogRow& row : r.dispatch_log) {
    os << fmt_fixed(row.time_s, 1) << ',' << row.event << ',' << row.vehicle << ','
       << row.request << ',' << row.origin_zone << ',' << row.dest_zone << ','
       << fmt_fixed(row.eta_s, 3) << '\n';
  }
  write_file(path, os.str());
}

void write_waitlist_csv(const fs::path& path, const RunResult& r) {
  std::ostringstream os;
  os << "time_s,waitlist_size\n";
  for (const auto& [t, n] : r.waitlist_series) os << fmt_fixed(t, 1) << ',' << n << '\n';
  write_file(path, os.str());
}

void write_relocation_csv(const fs::path& path, const RunResult& r, const Network& net) {
  std::ostringstream os;
  os << "time_s,zone_id,balance,parked,demand_block,moves_out,moves_in,residual\n";
  for (const BlockBalanceReport& rep : r.balance_reports) {
    std::map<ZoneIdx, std::pair<int, int>> move_counts;
    for (const RelocationMove& m : rep.moves) {
      ++move_counts[m.donor].first;
      ++move_counts[m.recipient].second;
    }
    for (const BlockBalanceEntry& e : rep.entries) {
      const auto mc = move_counts.count(e.zone) ? move_counts[e.zone] : std::pair<int, int>{0, 0};
      const bool residual =
          std::find(rep.residual_imbalance.begin(), rep.residual_imbalance.end(), e.zone) !=
          rep.residual_imbalance.end();
      os << fmt_fixed(rep.time_s, 1) << ',' << net.zone(e.zone).id << ','
         << fmt_fixed(e.balance, 6) << ',' << e.parked << ',' << fmt_fixed(e.demand_block, 6)
         << ',' << mc.first << ',' << mc.second << ',' << (residual ? 1 : 0) << '\n';
    }
  }
  write_file(path, os.str());
}

json totals_json(const NetworkTotals& t) {
  json j;
  j["vkt"] = t.vkt;
  j["delay_h"] = t.delay_h;
  j["free_flow_h"] = t.free_flow_h;
  j["travel_h"] = t.travel_h;
  j["avg_speed_kmh"] = t.avg_speed_kmh;
  j["empty_vkt"] = t.empty_vkt;
  return j;
}

json waits_json(const WaitStats& w) {
  json j;
  j["emitted"] = w.emitted;
  j["served"] = w.served;
  j["completed"] = w.completed;
  j["waitlisted_end"] = w.waitlisted_end;
  j["in_progress_end"] = w.in_progress_end;
  j["mean_wait_s"] = w.mean_wait_s;
  j["p50_wait_s"] = w.p50_wait_s;
  j["p90_wait_s"] = w.p90_wait_s;
  j["p95_wait_s"] = w.p95_wait_s;
  j["max_wait_s"] = w.max_wait_s;
  return j;
}

}  // namespace

void write_run_bundle(const fs::path& out_dir, const RunResult& r, const SimulationInputs& in) {
  fs::create_directories(out_dir);
  fs::create_directories(out_dir / "inputs");
  for (const fs::path& src : in.source_files)
    write_file(out_dir / "inputs" / src.filename(), read_file(src));

  if (r.cfg.binary_events) {
    std::ofstream os(out_dir / "events.bin", std::ios::binary);
    write_events_binary(os, r.events);
  } else {
    std::ofstream os(out_dir / "events.csv", std::ios::binary);
    write_events_csv(os, r.events);
  }
  write_metrics_csv(out_dir / "metrics.csv", r, in.net);

  json summary;
  summary["scenario"] = r.cfg.scenario == ScenarioKind::sav ? "sav" : "baseline";
  summary["input_hash"] = hex64(r.input_hash);
  summary["config"] = r.cfg.to_kv();
  summary["totals"] = totals_json(r.totals);
  summary["waits"] = waits_json(r.waits);

  if (r.cfg.scenario == ScenarioKind::baseline) {
    write_parking_csv(out_dir / "parking.csv", r, in.net);
    json parking;
    double total_slots = 0;
    for (auto s : r.baseline_slots) total_slots += static_cast<double>(s);
    parking["total_slots"] = total_slots;
    parking["turnover"] = r.turnover_fitted ? r.turnover.slope : 0.0;
    parking["turnover_r2"] = r.turnover_fitted ? r.turnover.r_squared : 0.0;
    parking["turnover_fitted"] = r.turnover_fitted;
    summary["parking"] = parking;
  } else {
    write_stations_csv(out_dir / "stations.csv", r, in.net);
    write_dispatch_csv(out_dir / "dispatch.csv", r);
    write_waitlist_csv(out_dir / "waitlist.csv", r);
    write_relocation_csv(out_dir / "relocation.csv", r, in.net);
    json parking;
    double total_slots = 0;
    for (int s : r.station_max) total_slots += s;
    parking["total_slots"] = total_slots;
    summary["parking"] = parking;
    double empty_km = 0, total_km = 0;
    for (const Vehicle& v : r.fleet) {
      empty_km += v.empty_km;
      total_km += v.odometer_km;
    }
    summary["fleet"] = {{"size", static_cast<std::int64_t>(r.fleet.size())},
                        {"odometer_km", total_km},
                        {"empty_km", empty_km}};
  }
  write_file(out_dir / "summary.json", summary.dump(2) + "\n");
}

namespace {

json read_json_file(const fs::path& p) {
  try {
    std::ifstream in(p);
    if (!in) throw IoError("cannot open " + p.string());
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw IoError(p.string() + ": " + e.what());
  }
}

struct LoadedRun {
  json summary;
  std::map<ExtId, ZoneMetrics> metrics;
  std::map<ExtId, double> parking_slots;
};

LoadedRun load_run_dir(const fs::path& dir, const std::string& expected_scenario) {
  LoadedRun lr;
  lr.summary = read_json_file(dir / "summary.json");
  const std::string sc = lr.summary.at("scenario").get<std::string>();
  if (sc != expected_scenario)
    throw ConfigError(dir.string() + ": expected a " + expected_scenario + " run, found " + sc);

  std::ifstream mf(dir / "metrics.csv");
  if (!mf) throw IoError("cannot open " + (dir / "metrics.csv").string());
  std::string line;
  std::getline(mf, line);  // header
  while (std::getline(mf, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    std::vector<std::string> f;
    while (std::getline(ls, field, ',')) f.push_back(field);
    if (f.size() != 10) throw IoError(dir.string() + "/metrics.csv: bad row");
    ZoneMetrics m;
    const ExtId zid = std::stoll(f[0]);
    m.vkt = std::stod(f[1]);
    m.delay_h = std::stod(f[2]);
    m.free_flow_h = std::stod(f[3]);
    m.travel_h = std::stod(f[4]);
    m.avg_speed_kmh = std::stod(f[5]);
    m.delay_ratio = std::stod(f[6]);
    m.empty_vkt = std::stod(f[7]);
    m.empty_delay_h = std::stod(f[8]);
    m.traversals = std::stoll(f[9]);
    lr.metrics[zid] = m;
  }

  const fs::path slots_file =
      expected_scenario == "baseline" ? dir / "parking.csv" : dir / "stations.csv";
  std::ifstream pf(slots_file);
  if (!pf) throw IoError("cannot open " + slots_file.string());
  std::getline(pf, line);
  while (std::getline(pf, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    std::vector<std::string> f;
    while (std::getline(ls, field, ',')) f.push_back(field);
    const ExtId zid = std::stoll(f[0]);
    lr.parking_slots[zid] = std::stod(f[expected_scenario == "baseline" ? 5 : 1]);
  }
  return lr;
}

std::vector<DesireLine> desire_lines_from_dispatch(const fs::path& dispatch_csv,
                                                   double window_start, double window_end) {
  std::ifstream in(dispatch_csv);
  if (!in) throw IoError("cannot open " + dispatch_csv.string());
  std::map<std::tuple<std::string, ExtId, ExtId>, std::int64_t> volumes;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    std::vector<std::string> f;
    while (std::getline(ls, field, ',')) f.push_back(field);
    if (f.size() != 7) continue;
    const double t = std::stod(f[0]);
    if (t < window_start || t >= window_end) continue;
    std::string kind;
    if (f[1] == "pickup_leg") kind = "pickup";
    else if (f[1] == "relocation_ordered") kind = "relocation";
    else continue;
    const ExtId oz = std::stoll(f[4]);
    const ExtId dz = std::stoll(f[5]);
    if (oz == dz) continue;
    ++volumes[{kind, oz, dz}];
  }
  std::vector<DesireLine> lines;
  for (const auto& [key, vol] : volumes)
    lines.push_back({std::get<1>(key), std::get<2>(key), std::get<0>(key), vol});
  return lines;
}

}  // namespace

CompareResult compare_runs(const fs::path& baseline_dir, const fs::path& sav_dir,
                           const fs::path& out_dir) {
  LoadedRun base = load_run_dir(baseline_dir, "baseline");
  LoadedRun sav = load_run_dir(sav_dir, "sav");

  const std::string bh = base.summary.at("input_hash").get<std::string>();
  const std::string sh = sav.summary.at("input_hash").get<std::string>();
  if (bh != sh)
    throw ConfigError("input hash mismatch between runs: baseline " + bh + " vs sav " + sh +
                      " (both scenarios must consume identical inputs)");

  // Rebuild the zone system from the bundled inputs.
  Network net = Network::build(read_nodes_csv(baseline_dir / "inputs" / "nodes.csv"),
                               read_links_csv(baseline_dir / "inputs" / "links.csv"),
                               read_zones_json(baseline_dir / "inputs" / "zones.json"));

  const int zc = net.zone_count();
  std::vector<ZoneMetrics> bm(zc), sm(zc);
  std::vector<double> bp(zc, 0.0), sp(zc, 0.0);
  for (ZoneIdx z = 0; z < zc; ++z) {
    const ExtId zid = net.zone(z).id;
    if (!base.metrics.count(zid) || !sav.metrics.count(zid))
      throw ConfigError("zone " + std::to_string(zid) + " missing from a metrics file");
    bm[z] = base.metrics.at(zid);
    sm[z] = sav.metrics.at(zid);
    bp[z] = base.parking_slots.at(zid);
    sp[z] = sav.parking_slots.at(zid);
  }

  CompareResult cr;
  cr.diffs = scenario_diff(sm, sp, bm, bp, net);
  cr.baseline_total_slots = std::accumulate(bp.begin(), bp.end(), 0.0);
  cr.sav_total_slots = std::accumulate(sp.begin(), sp.end(), 0.0);

  // Spearman correlations between the per-zone differences (Fig. 7 style).
  std::vector<double> dpark(zc), dvkt(zc), ddelay(zc), dspeed(zc);
  for (int z = 0; z < zc; ++z) {
    dpark[z] = cr.diffs[z].d_parking_slots;
    dvkt[z] = cr.diffs[z].d_vkt;
    ddelay[z] = cr.diffs[z].d_delay_h;
    dspeed[z] = cr.diffs[z].d_speed_kmh;
  }
  const std::vector<std::pair<std::string, const std::vector<double>*>> vars = {
      {"parking", &dpark}, {"vkt", &dvkt}, {"delay", &ddelay}, {"speed", &dspeed}};
  for (std::size_t i = 0; i < vars.size(); ++i)
    for (std::size_t j = i + 1; j < vars.size(); ++j)
      cr.correlations[vars[i].first + "-" + vars[j].first] =
          spearman(*vars[i].second, *vars[j].second);

  // Decomposition needs the fleet and the registered vehicle count.
  const auto fleet = static_cast<std::int64_t>(
      std::stod(sav.summary.at("config").at("fleet_size").get<std::string>()));
  const auto registered = static_cast<std::int64_t>(
      std::stod(base.summary.at("config").at("registered_vehicles").get<std::string>()));
  if (cr.baseline_total_slots >= cr.sav_total_slots) {
    cr.decomposition =
        decompose_reduction(cr.baseline_total_slots, cr.sav_total_slots, fleet, registered);
    cr.decomposition_valid = true;
  }

  // ---- report files ----
  fs::create_directories(out_dir);

  {
    std::ostringstream os;
    os << "zone_id,d_parking_slots,d_vkt,d_delay_h,d_speed_kmh\n";
    for (const ZoneDiff& d : cr.diffs) {
      os << d.zone_id << ',' << fmt_fixed(d.d_parking_slots, 3) << ',' << fmt_fixed(d.d_vkt, 6)
         << ',' << fmt_fixed(d.d_delay_h, 6) << ',' << fmt_fixed(d.d_speed_kmh, 4) << '\n';
    }
    os << "# spearman rank correlations of per-zone differences\n";
    for (const auto& [name, rho] : cr.correlations) {
      os << "# spearman " << name << " = " << (rho ? fmt_fixed(*rho, 6) : "undefined") << '\n';
    }
    write_file(out_dir / "diff.csv", os.str());
  }

  {
    // Parking by dominant land use, Table-2 shaped.
    struct Group {
      double area_m2{};
      double base_slots{};
      double sav_slots{};
    };
    std::array<Group, kLandUseCount> groups{};
    for (ZoneIdx z = 0; z < zc; ++z) {
      const int u = static_cast<int>(dominant_land_use(net.zone(z)));
      groups[u].area_m2 += net.zone_area_m2(z);
      groups[u].base_slots += bp[z];
      groups[u].sav_slots += sp[z];
    }
    std::ostringstream os;
    os << "zone_type,area_km2,current_slots,current_space_pct,sav_slots,sav_space_pct\n";
    Group total{};
    for (int u = 0; u < kLandUseCount; ++u) {
      const Group& g = groups[u];
      total.area_m2 += g.area_m2;
      total.base_slots += g.base_slots;
      total.sav_slots += g.sav_slots;
      os << kLandUseNames[u] << ',' << fmt_fixed(g.area_m2 / 1e6, 4) << ','
         << fmt_fixed(g.base_slots, 0) << ','
         << (g.area_m2 > 0 ? fmt_fixed(slots_to_area_m2(g.base_slots) / g.area_m2 * 100.0, 1)
                           : std::string("-"))
         << ',' << fmt_fixed(g.sav_slots, 0) << ','
         << (g.area_m2 > 0 ? fmt_fixed(slots_to_area_m2(g.sav_slots) / g.area_m2 * 100.0, 1)
                           : std::string("-"))
         << '\n';
    }
    os << "total," << fmt_fixed(total.area_m2 / 1e6, 4) << ',' << fmt_fixed(total.base_slots, 0)
       << ','
       << (total.area_m2 > 0
               ? fmt_fixed(slots_to_area_m2(total.base_slots) / total.area_m2 * 100.0, 1)
               : std::string("-"))
       << ',' << fmt_fixed(total.sav_slots, 0) << ','
       << (total.area_m2 > 0
               ? fmt_fixed(slots_to_area_m2(total.sav_slots) / total.area_m2 * 100.0, 1)
               : std::string("-"))
       << '\n';
    write_file(out_dir / "table2.csv", os.str());
  }

  {
    const json bt = base.summary.at("totals");
    const json st = sav.summary.at("totals");
    std::ostringstream os;
    os << "measurement,sav,current,change\n";
    auto row = [&os, &bt, &st](const char* label, const char* key, int prec) {
      const double b = bt.at(key).get<double>();
      const double s = st.at(key).get<double>();
      os << label << ',' << fmt_fixed(s, prec) << ',' << fmt_fixed(b, prec) << ','
         << format_pct_change(s, b) << '\n';
    };
    row("vkt_veh_km", "vkt", 1);
    row("delay_time_veh_h", "delay_h", 3);
    row("avg_travel_speed_kmh", "avg_speed_kmh", 2);
    os << "empty_vkt_veh_km," << fmt_fixed(st.at("empty_vkt").get<double>(), 1) << ','
       << fmt_fixed(bt.at("empty_vkt").get<double>(), 1) << ",\n";
    write_file(out_dir / "table3.csv", os.str());
  }

  {
    json d;
    d["baseline_total_slots"] = cr.baseline_total_slots;
    d["sav_total_slots"] = cr.sav_total_slots;
    d["valid"] = cr.decomposition_valid;
    if (cr.decomposition_valid) {
      d["total_reduction"] = cr.decomposition.total_reduction;
      d["fleet_component"] = cr.decomposition.fleet_component;
      d["efficiency_component"] = cr.decomposition.efficiency_component;
      d["fleet_share"] = cr.decomposition.fleet_share;
      d["efficiency_share"] = cr.decomposition.efficiency_share;
      d["efficiency_negative"] = cr.decomposition.efficiency_negative;
    }
    write_file(out_dir / "decomposition.json", d.dump(2) + "\n");
  }

  {
    const double ws = std::stod(sav.summary.at("config").at("report_start_s").get<std::string>());
    const double we = std::stod(sav.summary.at("config").at("report_end_s").get<std::string>());
    auto lines = desire_lines_from_dispatch(sav_dir / "dispatch.csv", ws, we);
    write_file(out_dir / "desire_lines.geojson", desire_lines_geojson(lines, net));
  }

  {
    std::ostringstream os;
    os << "zone_id,baseline_slots,sav_slots,reduction,reduction_pct,baseline_area_m2,"
          "sav_area_m2,freed_pct_of_zone\n";
    for (ZoneIdx z = 0; z < zc; ++z) {
      const double reduction = bp[z] - sp[z];
      const double zone_area = net.zone_area_m2(z);
      os << net.zone(z).id << ',' << fmt_fixed(bp[z], 0) << ',' << fmt_fixed(sp[z], 0) << ','
         << fmt_fixed(reduction, 0) << ','
         << (bp[z] > 0 ? fmt_fixed(reduction / bp[z] * 100.0, 2) : std::string("0.00")) << ','
         << fmt_fixed(slots_to_area_m2(bp[z]), 1) << ',' << fmt_fixed(slots_to_area_m2(sp[z]), 1)
         << ','
         << (zone_area > 0
                 ? fmt_fixed(slots_to_area_m2(reduction) / zone_area * 100.0, 2)
                 : std::string("0.00"))
         << '\n';
    }
    write_file(out_dir / "parking_report.csv", os.str());
  }

  {
    json cs;
    cs["input_hash"] = bh;
    cs["baseline_total_slots"] = cr.baseline_total_slots;
    cs["sav_total_slots"] = cr.sav_total_slots;
    json corr;
    for (const auto& [name, rho] : cr.correlations) {
      if (rho) corr[name] = *rho;
      else corr[name] = nullptr;
    }
    cs["spearman"] = corr;
    write_file(out_dir / "compare_summary.json", cs.dump(2) + "\n");
  }

  return cr;
}

std::vector<SweepPoint> sweep_fleet(const SimulationInputs& in, const ScenarioConfig& base_cfg,
                                    std::int64_t from, std::int64_t to, std::int64_t step) {
  if (from <= 0 || to < from || step <= 0) throw ConfigError("bad sweep range");
  std::vector<SweepPoint> points;
  for (std::int64_t fleet = from; fleet <= to; fleet += step) {
    ScenarioConfig cfg = base_cfg;
    cfg.scenario = ScenarioKind::sav;
    cfg.fleet_size = fleet;
    const RunResult r = run_sav(in, cfg);
    SweepPoint p;
    p.fleet = fleet;
    p.waits = r.waits;
    p.total_vkt = r.totals.vkt;
    p.empty_vkt = r.totals.empty_vkt;
    points.push_back(p);
  }
  return points;
}

void write_sweep_csv(const fs::path& path, std::span<const SweepPoint> points) {
  std::ostringstream os;
  os << "fleet,mean_wait_s,p50_wait_s,p90_wait_s,p95_wait_s,served,waitlisted_end,total_vkt,"
        "empty_vkt\n";
  for (const SweepPoint& p : points) {
    os << p.fleet << ',' << fmt_fixed(p.waits.mean_wait_s, 2) << ','
       << fmt_fixed(p.waits.p50_wait_s, 1) << ',' << fmt_fixed(p.waits.p90_wait_s, 1) << ','
       << fmt_fixed(p.waits.p95_wait_s, 1) << ',' << p.waits.served << ','
       << p.waits.waitlisted_end << ',' << fmt_fixed(p.total_vkt, 1) << ','
       << fmt_fixed(p.empty_vkt, 1) << '\n';
  }
  write_file(path, os.str());
}

}  // namespace savsim
