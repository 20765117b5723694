#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <vector>

#include "savsim/network.hpp"

namespace savsim {

using VehicleId = std::int32_t;

struct TraversalEvent {
  double time_s{};
  VehicleId vehicle{};
  ExtId link{};
  bool is_exit{};
  bool is_empty_run{};
};

struct Arrival {
  VehicleId vehicle{};
  double time_s{};
};

// Integer proportional rationing: apportion `capacity` over `demands` by
// largest remainder, ties to the lower index. sum(result) ==
// min(capacity, sum(demands)); result[i] <= demands[i].
std::vector<int> ration_proportional(const std::vector<int>& demands, int capacity);

// Mesoscopic dynamic network loading: link transmission model on the
// triangular fundamental diagram, discrete vehicles, physical queues with
// spillback. Deterministic: one logical thread, fixed processing order.
class FlowModel {
 public:
  FlowModel(const Network& net, double dt_s = 1.0);

  double now_s() const { return step_ * dt_; }
  double dt_s() const { return dt_; }
  std::int64_t step_index() const { return step_; }

  // Schedules a vehicle to depart at `depart_s` (>= now, grid-aligned) along
  // `route` (non-empty). The vehicle waits in a vertical queue at the route's
  // first node until the first link can accept it.
  void add_departure(VehicleId v, std::vector<LinkIdx> route, double depart_s,
                     bool empty_run);

  // Replaces the not-yet-traversed part of a vehicle's route. If the vehicle
  // has not yet entered its first link the whole route is replaced (must
  // start at the same node); if it is on a link, `tail` continues from that
  // link's end.
  void retarget(VehicleId v, std::vector<LinkIdx> tail);

  // Withdraws a vehicle that has not entered its first link yet (pending
  // departure or origin queue). Its injection is undone.
  void cancel(VehicleId v);

  struct Position {
    bool on_link{};          // false: pending departure / origin queue at `node`
    LinkIdx link{kInvalidIdx};
    NodeIdx node{kInvalidIdx};
    double entered_s{};      // entry time onto `link` (on_link only)
  };
  Position position(VehicleId v) const;
  // Travel-time table entries for the remaining route (current link remainder
  // estimated from the table minus elapsed time, clamped at zero).
  double remaining_route_time_s(VehicleId v, const TravelTimeTable& table) const;
  NodeIdx route_end_node(VehicleId v) const;

  // One synchronous step: flows, node transfers, injections, retirements.
  // Returns vehicles that completed their route this step.
  std::vector<Arrival> advance();

  // Pure Newell bounds at the current instant (real-valued, no integer
  // residuals); the engine applies these with Bresenham-style accumulators.
  double sending_flow(LinkIdx l) const;
  double receiving_flow(LinkIdx l) const;

  // Mean experienced traversal times since the previous refresh; links with
  // no exits keep their old entry; entries clamped at free-flow time.
  void refresh_travel_times(TravelTimeTable& table);

  const std::vector<TraversalEvent>& events() const { return events_; }
  int vehicles_on_link(LinkIdx l) const { return static_cast<int>(links_rt_[l].q.size()); }
  int queued_at_origin(NodeIdx n) const { return static_cast<int>(origin_q_[n].size()); }

  struct Counts {
    std::int64_t injected{};   // departures handed to the model
    std::int64_t on_network{}; // origin queues + on links
    std::int64_t retired{};
  };
  Counts counts() const;

 private:
  struct OnLinkVehicle {
    VehicleId id{};
    std::int64_t entry_step{};
    std::int64_t exit_eligible_step{};
  };
  struct LinkRt {
    std::deque<OnLinkVehicle> q;
    std::int64_t n_in{0}, n_out{0};
    std::vector<std::int64_t> out_hist;  // ring buffer, n_out at past steps
    double send_res{0.0}, recv_res{0.0}; // fractional capacity carry
    double win_dur_sum{0.0};             // traversal-time window accumulators
    std::int64_t win_exits{0};
  };
  enum class Activity { idle, pending, queued, on_link };
  struct VehicleRt {
    std::vector<LinkIdx> route;
    std::int32_t route_pos{0};  // index of current link once on network
    Activity activity{Activity::idle};
    bool empty_run{false};
    std::int64_t entry_step{0};
  };
  struct PendingDeparture {
    std::int64_t step;
    VehicleId vehicle;
    bool operator>(const PendingDeparture& o) const {
      return std::tie(step, vehicle) > std::tie(o.step, o.vehicle);
    }
  };

  const VehicleRt& rt(VehicleId v) const;
  VehicleRt& rt(VehicleId v);
  int eligible_exits(const LinkRt& lr) const;
  std::int64_t out_hist_at(LinkIdx l, std::int64_t s) const;

  const Network& net_;
  double dt_;
  std::int64_t step_{0};

  std::vector<LinkRt> links_rt_;
  std::vector<int> fft_steps_, bwd_steps_;
  std::vector<std::deque<VehicleId>> origin_q_;
  std::vector<PendingDeparture> pending_;  // min-heap by (step, vehicle)
  std::vector<VehicleRt> vehicles_;
  std::vector<std::int32_t> vehicle_slot_;  // VehicleId -> vehicles_ index

  std::vector<TraversalEvent> events_;
  std::int64_t injected_{0}, retired_{0};
};

}  // namespace savsim
