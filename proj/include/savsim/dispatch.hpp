#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "savsim/demand.hpp"
#include "savsim/flow.hpp"
#include "savsim/network.hpp"
#include "savsim/rng.hpp"
#include "savsim/routing.hpp"

namespace savsim {

enum class VehicleState { parked, returning, relocating, picking_up, occupied };
enum class VehicleEvent {
  assigned,
  reached_pickup,
  reached_destination,
  reached_station,
  relocation_ordered,
};

std::string_view to_string(VehicleState s);
std::string_view to_string(VehicleEvent e);

// The SAV state machine. Throws InvariantViolation on an illegal transition.
VehicleState transition(VehicleState state, VehicleEvent event);

struct Vehicle {
  VehicleId id{};
  VehicleState state{VehicleState::parked};
  ZoneIdx zone{kInvalidIdx};             // station zone while parked
  std::int64_t request{-1};              // request being picked up / carried
  std::int64_t reserved_request{-1};     // next request while still occupied
  ZoneIdx relocation_target{kInvalidIdx};
  double odometer_km{0.0};
  double empty_km{0.0};
};

// Eq.-style fleet seeding: counts proportional to per-zone generations,
// rounded by largest remainder (ties to the lower index) so they sum to
// fleet_size exactly.
std::vector<std::int64_t> initial_distribution(std::int64_t fleet_size,
                                               const std::vector<double>& generations);

// Per-zone supply/demand balance; positive = oversupply. Zero demand total
// degenerates to the pure supply term.
double block_balance(double savs_block, double savs_total, double demand_block,
                     double demand_total);

struct RelocationMove {
  ZoneIdx donor{};
  ZoneIdx recipient{};
};

struct RelocationThresholds {
  double lower{-5.0};
  double upper{5.0};
};

// Greedy relocation planning: zones beyond the thresholds send parked
// vehicles to the nearest needy neighbor (BFS over the zone graph up to
// `radius`, lowest zone index on ties), one vehicle at a time, updating both
// balances, until every touched zone is inside the thresholds or supply runs
// out. `balances` and `parked` are updated in place.
std::vector<RelocationMove> plan_relocation(std::vector<double>& balances,
                                            std::vector<int>& parked, const Network& net,
                                            RelocationThresholds thresholds, int radius);

struct BlockBalanceEntry {
  ZoneIdx zone{};
  double balance{};
  int parked{};
  double demand_block{};
};

struct BlockBalanceReport {
  double time_s{};
  double savs_total{};
  double demand_total{};
  std::vector<BlockBalanceEntry> entries;
  std::vector<RelocationMove> moves;
  std::vector<ZoneIdx> residual_imbalance;  // still beyond thresholds afterwards
};

// Sequential greedy matching kernel, decoupled from routing so it can be
// checked against a brute-force oracle. Travelers come in FCFS order; each
// takes the candidate with minimum ETA (ties to the lower vehicle id) and is
// waitlisted when the minimum exceeds max_wait. Assigned vehicles leave the
// candidate pool immediately.
struct MatchAssignment {
  int traveler{};   // index into the FCFS order
  VehicleId vehicle{};
  double eta_s{};
};
struct MatchOutcome {
  std::vector<MatchAssignment> assignments;
  std::vector<int> waitlisted;
};
using EtaFn = std::function<std::optional<double>(VehicleId, int traveler)>;
MatchOutcome greedy_match(int traveler_count, const std::vector<VehicleId>& vehicles,
                          const EtaFn& eta, double max_wait_s);

struct DispatchLogRow {
  double time_s{};
  std::string event;
  VehicleId vehicle{-1};
  std::int64_t request{-1};
  ExtId origin_zone{-1};
  ExtId dest_zone{-1};
  double eta_s{-1.0};
};

struct DispatchConfig {
  double max_wait_s{600.0};
  double matching_period_s{30.0};
  double relocation_period_s{300.0};
  RelocationThresholds thresholds{};
  int relocation_radius{2};
  double logit_theta{0.01};
  int k_routes{3};
  double vot_weight{0.0};
  double dwell_s{0.0};
  double report_start_s{7 * 3600.0};
  double report_end_s{9 * 3600.0};
};

// Central controller with complete information: owns the fleet state
// machine, FCFS matching with waitlist, Block-Balance relocation, and the
// station occupancy record.
class Dispatcher {
 public:
  Dispatcher(const Network& net, const OdMatrix& od, FlowModel& flow,
             const DispatchConfig& cfg, Rng& rng);

  void init_fleet(std::int64_t fleet_size);
  void handle_new_requests(std::vector<TripRequest> requests);
  void matching_tick(double t, const TravelTimeTable& table);
  void relocation_tick(double t, const TravelTimeTable& table);
  void on_arrival(VehicleId v, double t, const TravelTimeTable& table);
  void sample_station_occupancy(double t);

  const std::vector<Vehicle>& vehicles() const { return vehicles_; }
  std::vector<Vehicle>& vehicles() { return vehicles_; }
  const std::vector<TripRequest>& requests() const { return requests_; }
  const std::vector<DispatchLogRow>& log() const { return log_; }
  const std::vector<std::pair<double, int>>& waitlist_series() const { return waitlist_series_; }
  const std::vector<BlockBalanceReport>& balance_reports() const { return balance_reports_; }
  const std::vector<std::vector<int>>& station_series() const { return station_series_; }
  int parked_count(ZoneIdx z) const { return static_cast<int>(stations_[z].size()); }
  std::int64_t fleet_size() const { return static_cast<std::int64_t>(vehicles_.size()); }
  int waitlist_size() const { return static_cast<int>(waitlist_.size()); }

 private:
  struct EtaDetail {
    double eta{};
  };
  std::vector<double> distances_to_station(NodeIdx target, const TravelTimeTable& table) const;
  std::optional<double> vehicle_eta(const Vehicle& v, const std::vector<double>& dist_to_target,
                                    const TravelTimeTable& table) const;
  void assign(Vehicle& v, TripRequest& r, double t, double eta, const TravelTimeTable& table);
  void start_pickup_leg(Vehicle& v, TripRequest& r, double t, const TravelTimeTable& table);
  void reached_pickup(Vehicle& v, double t, const TravelTimeTable& table);
  void reached_destination(Vehicle& v, double t, const TravelTimeTable& table);
  void reached_station(Vehicle& v, ZoneIdx zone, double t);
  std::vector<LinkIdx> choose_leg_route(NodeIdx from, NodeIdx to, const TravelTimeTable& table);
  void log_row(double t, std::string event, VehicleId v, std::int64_t req, ExtId oz, ExtId dz,
               double eta);
  ZoneIdx vehicle_zone_now(const Vehicle& v) const;

  const Network& net_;
  const OdMatrix& od_;
  FlowModel& flow_;
  DispatchConfig cfg_;
  Rng& rng_;

  std::vector<Vehicle> vehicles_;
  std::vector<std::set<VehicleId>> stations_;  // parked (non-assigned) per zone
  std::vector<TripRequest> requests_;          // index == request id
  std::vector<std::int64_t> waitlist_;         // FCFS
  std::vector<std::int64_t> fresh_;            // arrived since last matching tick

  std::vector<DispatchLogRow> log_;
  std::vector<std::pair<double, int>> waitlist_series_;
  std::vector<BlockBalanceReport> balance_reports_;
  std::vector<std::vector<int>> station_series_;  // per zone, reporting window
};

}  // namespace savsim
