#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "savsim/analysis.hpp"
#include "savsim/demand.hpp"
#include "savsim/dispatch.hpp"
#include "savsim/io.hpp"
#include "savsim/network.hpp"
#include "savsim/parking.hpp"

namespace savsim {

enum class ScenarioKind { baseline, sav };

struct ScenarioConfig {
  ScenarioKind scenario{ScenarioKind::baseline};
  std::int64_t fleet_size{0};
  std::int64_t registered_vehicles{0};
  double max_wait_s{600.0};
  double matching_period_s{30.0};
  double relocation_period_s{300.0};
  double tt_refresh_period_s{600.0};
  double threshold_low{-5.0};
  double threshold_high{5.0};
  double logit_theta{0.01};
  int k_routes{3};
  double dt_s{1.0};
  double start_s{4 * 3600.0};
  double report_start_s{7 * 3600.0};
  double report_end_s{9 * 3600.0};
  double horizon_s{-1.0};  // defaults to report_end_s
  std::uint64_t seed{1};
  double vot_weight{0.0};
  int relocation_radius{2};
  double dwell_s{0.0};
  bool binary_events{false};

  double horizon() const { return horizon_s > 0 ? horizon_s : report_end_s; }
  void validate() const;
  static ScenarioConfig from_kv(const std::map<std::string, std::string>& kv);
  static ScenarioConfig from_file(const fs::path& path);
  std::map<std::string, std::string> to_kv() const;
};

struct SimulationInputs {
  Network net;
  OdMatrix od;
  std::uint64_t input_hash{0};
  std::vector<fs::path> source_files;  // copied into the run bundle
};

SimulationInputs load_inputs(const fs::path& network_dir, const fs::path& od_path,
                             const std::optional<fs::path>& coefficients_path = std::nullopt,
                             bool od_is_daily = false);

struct WaitStats {
  std::int64_t emitted{};      // requests generated in the reporting window
  std::int64_t served{};       // picked up
  std::int64_t completed{};
  std::int64_t waitlisted_end{};
  std::int64_t in_progress_end{};
  double mean_wait_s{};
  double p50_wait_s{};
  double p90_wait_s{};
  double p95_wait_s{};
  double max_wait_s{};
};

struct RunResult {
  ScenarioConfig cfg;
  std::uint64_t input_hash{0};
  std::vector<TraversalEvent> events;
  std::vector<ZoneMetrics> zones;  // reporting window
  NetworkTotals totals;
  WaitStats waits;

  // Baseline parking pipeline
  std::vector<ZoneStaticEstimate> statics;
  std::vector<double> arrivals;          // per zone over the reporting window
  TurnoverFit turnover{};
  bool turnover_fitted{false};
  std::vector<std::int64_t> baseline_slots;

  // SAV scenario
  std::vector<int> station_max;          // per-zone max occupancy in the window
  std::vector<DispatchLogRow> dispatch_log;
  std::vector<std::pair<double, int>> waitlist_series;
  std::vector<BlockBalanceReport> balance_reports;
  std::vector<Vehicle> fleet;            // final state with odometers
};

RunResult run_baseline(const SimulationInputs& in, const ScenarioConfig& cfg);
RunResult run_sav(const SimulationInputs& in, const ScenarioConfig& cfg);
RunResult run_scenario(const SimulationInputs& in, const ScenarioConfig& cfg);

// Report bundle written by `run`; consumed by `compare`.
void write_run_bundle(const fs::path& out_dir, const RunResult& result,
                      const SimulationInputs& in);

struct CompareResult {
  std::vector<ZoneDiff> diffs;
  // Spearman correlations between per-zone differences, keyed by pair name.
  std::map<std::string, std::optional<double>> correlations;
  ReductionDecomposition decomposition{};
  bool decomposition_valid{false};
  double baseline_total_slots{};
  double sav_total_slots{};
};

CompareResult compare_runs(const fs::path& baseline_dir, const fs::path& sav_dir,
                           const fs::path& out_dir);

struct SweepPoint {
  std::int64_t fleet{};
  WaitStats waits;
  double total_vkt{};
  double empty_vkt{};
};

std::vector<SweepPoint> sweep_fleet(const SimulationInputs& in, const ScenarioConfig& base_cfg,
                                    std::int64_t from, std::int64_t to, std::int64_t step);
void write_sweep_csv(const fs::path& path, std::span<const SweepPoint> points);

// Dominant land use of a zone: argmax area, ties to the earlier type in the
// canonical order.
LandUse dominant_land_use(const Zone& z);

}  // namespace savsim
