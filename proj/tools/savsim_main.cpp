#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "savsim/io.hpp"
#include "savsim/parking.hpp"
#include "savsim/scenario.hpp"

namespace {

using namespace savsim;

int cmd_run(const std::string& config, const std::string& network_dir, const std::string& od,
            const std::string& out, const std::optional<std::string>& coefficients,
            bool od_is_daily, const std::optional<std::string>& event_format) {
  ScenarioConfig cfg = ScenarioConfig::from_file(config);
  if (event_format) {
    if (*event_format == "binary") cfg.binary_events = true;
    else if (*event_format == "csv") cfg.binary_events = false;
    else throw ConfigError("--event-format must be csv or binary");
  }
  std::optional<fs::path> coef;
  if (coefficients) coef = fs::path(*coefficients);
  SimulationInputs in = load_inputs(network_dir, od, coef, od_is_daily);
  RunResult result = run_scenario(in, cfg);
  write_run_bundle(out, result, in);
  std::cout << "scenario " << (cfg.scenario == ScenarioKind::sav ? "sav" : "baseline")
            << ": vkt=" << fmt_fixed(result.totals.vkt, 1)
            << " delay_h=" << fmt_fixed(result.totals.delay_h, 2)
            << " avg_speed=" << fmt_fixed(result.totals.avg_speed_kmh, 2)
            << " served=" << result.waits.served << "/" << result.waits.emitted
            << " mean_wait_s=" << fmt_fixed(result.waits.mean_wait_s, 1) << "\n"
            << "bundle written to " << out << "\n";
  return 0;
}

int cmd_compare(const std::string& baseline, const std::string& sav, const std::string& out) {
  CompareResult cr = compare_runs(baseline, sav, out);
  std::cout << "baseline slots=" << fmt_fixed(cr.baseline_total_slots, 0)
            << " sav slots=" << fmt_fixed(cr.sav_total_slots, 0) << "\n";
  for (const auto& [name, rho] : cr.correlations)
    std::cout << "spearman " << name << " = " << (rho ? fmt_fixed(*rho, 4) : "undefined") << "\n";
  std::cout << "reports written to " << out << "\n";
  return 0;
}

int cmd_sweep(const std::string& fleet_range, const std::string& config,
              const std::string& network_dir, const std::string& od, const std::string& out) {
  long long from{}, to{}, step{};
  if (std::sscanf(fleet_range.c_str(), "%lld:%lld:%lld", &from, &to, &step) != 3)
    throw ConfigError("--fleet expects FROM:TO:STEP");
  ScenarioConfig cfg = ScenarioConfig::from_file(config);
  SimulationInputs in = load_inputs(network_dir, od);
  auto points = sweep_fleet(in, cfg, from, to, step);
  fs::create_directories(out);
  write_sweep_csv(fs::path(out) / "sweep.csv", points);
  for (const SweepPoint& p : points)
    std::cout << "fleet " << p.fleet << ": mean_wait_s=" << fmt_fixed(p.waits.mean_wait_s, 1)
              << " served=" << p.waits.served << "/" << p.waits.emitted << "\n";
  std::cout << "sweep written to " << (fs::path(out) / "sweep.csv").string() << "\n";
  return 0;
}

int cmd_parking_estimate(const std::string& zones_path, const std::string& rates_path,
                         const std::string& arrivals_path, std::int64_t registered,
                         const std::optional<std::string>& out) {
  auto zones = read_zones_json(zones_path);
  GenerationRateTable rates =
      rates_path.empty() ? GenerationRateTable::defaults() : read_rates_json(rates_path);
  auto arrival_rows = read_arrivals_csv(arrivals_path);

  std::vector<double> arrivals(zones.size(), 0.0);
  for (const auto& [zid, a] : arrival_rows) {
    bool found = false;
    for (std::size_t i = 0; i < zones.size(); ++i) {
      if (zones[i].id == zid) {
        arrivals[i] = a;
        found = true;
        break;
      }
    }
    if (!found) throw ValidationError("arrivals.csv references unknown zone " + std::to_string(zid));
  }

  auto statics = static_estimate(zones, rates, registered);
  std::vector<double> static_totals(zones.size());
  for (std::size_t i = 0; i < zones.size(); ++i) static_totals[i] = statics[i].static_total;
  const TurnoverFit fit = fit_turnover(arrivals, static_totals);
  const auto final_slots = final_baseline_demand(arrivals, fit.slope);

  std::ostringstream os;
  os << "zone_id,facility_slots,garage_slots,static_total,arrivals,final_slots,area_m2\n";
  for (std::size_t i = 0; i < zones.size(); ++i) {
    os << zones[i].id << ',' << fmt_fixed(statics[i].facility_slots, 3) << ','
       << fmt_fixed(statics[i].garage_slots, 3) << ',' << fmt_fixed(statics[i].static_total, 3)
       << ',' << fmt_fixed(arrivals[i], 3) << ',' << final_slots[i] << ','
       << fmt_fixed(slots_to_area_m2(static_cast<double>(final_slots[i])), 1) << '\n';
  }
  os << "# turnover=" << fmt_fixed(fit.slope, 6) << " r2=" << fmt_fixed(fit.r_squared, 6) << '\n';
  if (out) {
    write_file(*out, os.str());
    std::cout << "estimate written to " << *out << "\n";
  } else {
    std::cout << os.str();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"savsim: SAV parking/congestion tradeoff simulator"};
  app.require_subcommand(1);

  std::string config, network_dir, od, out, baseline_dir, sav_dir, fleet_range;
  std::optional<std::string> coefficients, event_format, estimate_out;
  bool od_is_daily = false;
  std::string zones_path, rates_path, arrivals_path;
  std::int64_t registered = 0;

  auto* run = app.add_subcommand("run", "run one scenario and write its report bundle");
  run->add_option("--config", config, "scenario config (key = value text)")->required();
  run->add_option("--network-dir", network_dir, "directory with nodes.csv, links.csv, zones.json")
      ->required();
  run->add_option("--od", od, "hourly OD csv (or daily with --od-is-daily)")->required();
  run->add_option("--out", out, "output bundle directory")->required();
  run->add_option("--coefficients", coefficients, "time_coefficients.csv for daily OD input");
  run->add_flag("--od-is-daily", od_is_daily, "treat --od as daily totals, expanded hourly");
  run->add_option("--event-format", event_format, "event log format: csv|binary");

  auto* compare = app.add_subcommand("compare", "compare a baseline and an SAV run");
  compare->add_option("--baseline", baseline_dir, "baseline run bundle")->required();
  compare->add_option("--sav", sav_dir, "sav run bundle")->required();
  compare->add_option("--out", out, "comparison output directory")->required();

  auto* sweep = app.add_subcommand("sweep", "run a fleet-size grid, report wait times");
  sweep->add_option("--fleet", fleet_range, "FROM:TO:STEP fleet sizes")->required();
  sweep->add_option("--config", config, "scenario config")->required();
  sweep->add_option("--network-dir", network_dir, "network directory")->required();
  sweep->add_option("--od", od, "hourly OD csv")->required();
  sweep->add_option("--out", out, "output directory")->required();

  auto* parking = app.add_subcommand("parking", "parking demand tools");
  auto* estimate = parking->add_subcommand("estimate", "baseline parking estimate from land use");
  estimate->add_option("--zones", zones_path, "zones.json")->required();
  estimate->add_option("--rates", rates_path, "rates.json overriding the default table");
  estimate->add_option("--arrivals", arrivals_path, "zone_id,arrivals csv")->required();
  estimate->add_option("--registered", registered, "registered private vehicles in the region");
  estimate->add_option("--out", estimate_out, "write csv here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(config, network_dir, od, out, coefficients, od_is_daily, event_format);
    if (compare->parsed()) return cmd_compare(baseline_dir, sav_dir, out);
    if (sweep->parsed()) return cmd_sweep(fleet_range, config, network_dir, od, out);
    if (parking->parsed() && estimate->parsed())
      return cmd_parking_estimate(zones_path, rates_path, arrivals_path, registered, estimate_out);
    std::cerr << app.help();
    return 2;
  } catch (const savsim::Error& e) {
    nlohmann::json err;
    const char* type = "error";
    if (dynamic_cast<const savsim::ValidationError*>(&e)) type = "validation";
    else if (dynamic_cast<const savsim::IoError*>(&e)) type = "io";
    else if (dynamic_cast<const savsim::ConfigError*>(&e)) type = "config";
    else if (dynamic_cast<const savsim::InvariantViolation*>(&e)) type = "invariant";
    err["error"]["type"] = type;
    err["error"]["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    nlohmann::json err;
    err["error"]["type"] = "internal";
    err["error"]["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return 1;
  }
}
