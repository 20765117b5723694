#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "savsim/analysis.hpp"
#include "savsim/dispatch.hpp"
#include "savsim/parking.hpp"
#include "savsim/scenario.hpp"

namespace py = pybind11;
using namespace savsim;

namespace {

py::dict waits_dict(const WaitStats& w) {
  py::dict d;
  d["emitted"] = w.emitted;
  d["served"] = w.served;
  d["completed"] = w.completed;
  d["waitlisted_end"] = w.waitlisted_end;
  d["in_progress_end"] = w.in_progress_end;
  d["mean_wait_s"] = w.mean_wait_s;
  d["p50_wait_s"] = w.p50_wait_s;
  d["p90_wait_s"] = w.p90_wait_s;
  d["p95_wait_s"] = w.p95_wait_s;
  return d;
}

py::dict run_summary(const RunResult& r) {
  py::dict d;
  d["scenario"] = r.cfg.scenario == ScenarioKind::sav ? "sav" : "baseline";
  py::dict totals;
  totals["vkt"] = r.totals.vkt;
  totals["delay_h"] = r.totals.delay_h;
  totals["avg_speed_kmh"] = r.totals.avg_speed_kmh;
  totals["empty_vkt"] = r.totals.empty_vkt;
  d["totals"] = totals;
  d["waits"] = waits_dict(r.waits);
  if (r.cfg.scenario == ScenarioKind::sav) {
    std::int64_t slots = 0;
    for (int s : r.station_max) slots += s;
    d["sav_total_slots"] = slots;
  } else {
    std::int64_t slots = 0;
    for (auto s : r.baseline_slots) slots += s;
    d["baseline_total_slots"] = slots;
    d["turnover"] = r.turnover.slope;
  }
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "SAV parking/congestion tradeoff simulator (C++ core)";

  m.def("block_balance", &block_balance, py::arg("savs_block"), py::arg("savs_total"),
        py::arg("demand_block"), py::arg("demand_total"),
        "Per-zone supply/demand balance; positive = oversupply.");

  m.def("initial_distribution", &initial_distribution, py::arg("fleet_size"),
        py::arg("generations"),
        "Largest-remainder fleet seeding proportional to zone generations.");

  m.def(
      "spearman",
      [](const std::vector<double>& x, const std::vector<double>& y) -> py::object {
        const auto rho = spearman(x, y);
        if (!rho) return py::none();
        return py::float_(*rho);
      },
      py::arg("x"), py::arg("y"),
      "Spearman rank correlation; None when a rank vector has zero variance.");

  m.def("slots_to_area_m2", &slots_to_area_m2, py::arg("slots"));

  m.def(
      "fit_turnover",
      [](const std::vector<double>& arrivals, const std::vector<double>& statics) {
        const auto fit = fit_turnover(arrivals, statics);
        return py::make_tuple(fit.slope, fit.r_squared);
      },
      py::arg("arrivals"), py::arg("static_totals"),
      "Through-origin regression slope (turnover) and R^2.");

  m.def(
      "final_baseline_demand",
      [](const std::vector<double>& arrivals, double turnover) {
        return final_baseline_demand(arrivals, turnover);
      },
      py::arg("arrivals"), py::arg("turnover"));

  m.def(
      "decompose_reduction",
      [](double baseline, double sav, std::int64_t fleet, std::int64_t registered) {
        const auto d = decompose_reduction(baseline, sav, fleet, registered);
        py::dict out;
        out["total_reduction"] = d.total_reduction;
        out["fleet_component"] = d.fleet_component;
        out["efficiency_component"] = d.efficiency_component;
        out["fleet_share"] = d.fleet_share;
        out["efficiency_share"] = d.efficiency_share;
        out["efficiency_negative"] = d.efficiency_negative;
        return out;
      },
      py::arg("baseline_total_slots"), py::arg("sav_total_slots"), py::arg("fleet_size"),
      py::arg("registered_vehicles"));

  m.def("repurposed_floor_space", &repurposed_floor_space, py::arg("freed_area_m2"),
        py::arg("main_use_area_m2"), py::arg("far"));

  m.def(
      "expand_daily_to_hourly",
      [](int zone_count, const std::vector<std::tuple<int, int, double>>& daily,
         const std::vector<double>& coefficients) {
        std::vector<OdRow> rows;
        for (const auto& [o, d, trips] : daily)
          rows.push_back({0, static_cast<ZoneIdx>(o), static_cast<ZoneIdx>(d), trips});
        const OdMatrix od = OdMatrix::expand_daily_to_hourly(zone_count, rows, coefficients);
        std::vector<std::tuple<int, int, int, double>> out;
        for (int p = 0; p < od.pair_count(); ++p)
          for (int h = 0; h < kHoursPerDay; ++h)
            if (od.pair_rate(p, h) > 0)
              out.emplace_back(h, od.pairs()[p].origin, od.pairs()[p].dest, od.pair_rate(p, h));
        return out;
      },
      py::arg("zone_count"), py::arg("daily"), py::arg("coefficients"),
      "Expand daily (origin, dest, trips) rows into hourly rows.");

  m.def(
      "run_scenario",
      [](const std::string& config, const std::string& network_dir, const std::string& od,
         const std::string& out_dir) {
        const ScenarioConfig cfg = ScenarioConfig::from_file(config);
        const SimulationInputs in = load_inputs(network_dir, od);
        const RunResult r = run_scenario(in, cfg);
        write_run_bundle(out_dir, r, in);
        return run_summary(r);
      },
      py::arg("config"), py::arg("network_dir"), py::arg("od"), py::arg("out_dir"),
      "Run one scenario, write its report bundle, return the summary.");

  m.def(
      "compare_runs",
      [](const std::string& baseline_dir, const std::string& sav_dir, const std::string& out) {
        const CompareResult cr = compare_runs(baseline_dir, sav_dir, out);
        py::dict d;
        d["baseline_total_slots"] = cr.baseline_total_slots;
        d["sav_total_slots"] = cr.sav_total_slots;
        py::dict corr;
        for (const auto& [name, rho] : cr.correlations)
          corr[name.c_str()] = rho ? py::object(py::float_(*rho)) : py::object(py::none());
        d["spearman"] = corr;
        return d;
      },
      py::arg("baseline_dir"), py::arg("sav_dir"), py::arg("out_dir"));

  py::register_exception<Error>(m, "SavsimError");
}
