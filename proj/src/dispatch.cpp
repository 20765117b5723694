#include "savsim/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <queue>

namespace savsim {

int logit_choice(const std::vector<double>& costs, double theta, Rng& rng) {
  if (costs.empty()) throw InvariantViolation("logit_choice: no alternatives");
  if (theta < 0) throw ValidationError("logit_choice: negative theta");
  if (costs.size() == 1) return 0;
  const double min_cost = *std::min_element(costs.begin(), costs.end());
  std::vector<double> w(costs.size());
  double total = 0.0;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    w[i] = std::exp(-theta * (costs[i] - min_cost));
    total += w[i];
  }
  const double u = rng.uniform() * total;
  double cum = 0.0;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    cum += w[i];
    if (u < cum) return static_cast<int>(i);
  }
  return static_cast<int>(costs.size()) - 1;
}

std::string_view to_string(VehicleState s) {
  switch (s) {
    case VehicleState::parked: return "parked";
    case VehicleState::returning: return "returning_to_station";
    case VehicleState::relocating: return "relocating";
    case VehicleState::picking_up: return "picking_up";
    case VehicleState::occupied: return "occupied";
  }
  return "?";
}

std::string_view to_string(VehicleEvent e) {
  switch (e) {
    case VehicleEvent::assigned: return "assigned";
    case VehicleEvent::reached_pickup: return "reached_pickup";
    case VehicleEvent::reached_destination: return "reached_destination";
    case VehicleEvent::reached_station: return "reached_station";
    case VehicleEvent::relocation_ordered: return "relocation_ordered";
  }
  return "?";
}

VehicleState transition(VehicleState state, VehicleEvent event) {
  switch (event) {
    case VehicleEvent::assigned:
      if (state == VehicleState::parked || state == VehicleState::returning ||
          state == VehicleState::relocating)
        return VehicleState::picking_up;
      break;
    case VehicleEvent::reached_pickup:
      if (state == VehicleState::picking_up) return VehicleState::occupied;
      break;
    case VehicleEvent::reached_destination:
      if (state == VehicleState::occupied) return VehicleState::returning;
      break;
    case VehicleEvent::reached_station:
      if (state == VehicleState::returning || state == VehicleState::relocating)
        return VehicleState::parked;
      break;
    case VehicleEvent::relocation_ordered:
      if (state == VehicleState::parked) return VehicleState::relocating;
      break;
  }
  throw InvariantViolation(std::string("illegal vehicle transition: ") +
                           std::string(to_string(state)) + " + " +
                           std::string(to_string(event)));
}

std::vector<std::int64_t> initial_distribution(std::int64_t fleet_size,
                                               const std::vector<double>& generations) {
  if (fleet_size < 0) throw ValidationError("initial_distribution: negative fleet size");
  double total = 0.0;
  for (double g : generations) {
    if (g < 0) throw ValidationError("initial_distribution: negative generation");
    total += g;
  }
  if (!(total > 0)) throw ValidationError("initial_distribution: all-zero generations");

  const std::size_t n = generations.size();
  std::vector<std::int64_t> counts(n, 0);
  std::vector<double> rem(n, 0.0);
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double exact = static_cast<double>(fleet_size) * generations[i] / total;
    counts[i] = static_cast<std::int64_t>(std::floor(exact));
    rem[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&rem](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; assigned < fleet_size; ++k) {
    ++counts[order[k % n]];
    ++assigned;
  }
  return counts;
}

double block_balance(double savs_block, double savs_total, double demand_block,
                     double demand_total) {
  if (!(savs_total > 0)) throw ValidationError("block_balance: SAVs_Total must be positive");
  if (!(demand_total > 0)) return savs_block;  // pure supply term by convention
  return savs_total * (savs_block / savs_total - demand_block / demand_total);
}

std::vector<RelocationMove> plan_relocation(std::vector<double>& balances,
                                            std::vector<int>& parked, const Network& net,
                                            RelocationThresholds th, int radius) {
  const int zc = net.zone_count();
  std::vector<RelocationMove> moves;
  std::vector<char> donor_blocked(zc, 0);  // no reachable recipient this tick

  auto find_recipient = [&](ZoneIdx donor) -> ZoneIdx {
    std::vector<int> depth(zc, -1);
    depth[donor] = 0;
    std::deque<ZoneIdx> bfs{donor};
    while (!bfs.empty()) {
      const ZoneIdx z = bfs.front();
      bfs.pop_front();
      if (depth[z] > 0 && balances[z] < th.lower) return z;  // nearest first, id order
      if (depth[z] == radius) continue;
      for (ZoneIdx nb : net.zone_neighbors(z)) {
        if (depth[nb] < 0) {
          depth[nb] = depth[z] + 1;
          bfs.push_back(nb);
        }
      }
    }
    return kInvalidIdx;
  };

  for (;;) {
    ZoneIdx donor = kInvalidIdx;
    for (ZoneIdx z = 0; z < zc; ++z) {
      if (donor_blocked[z] || parked[z] <= 0 || !(balances[z] > th.upper)) continue;
      if (donor == kInvalidIdx || balances[z] > balances[donor]) donor = z;
    }
    if (donor == kInvalidIdx) break;
    const ZoneIdx recipient = find_recipient(donor);
    if (recipient == kInvalidIdx) {
      donor_blocked[donor] = 1;
      continue;
    }
    // Eq. 2 is linear in SAVs_Block with unit coefficient, so one vehicle
    // shifts both balances by exactly one.
    moves.push_back({donor, recipient});
    balances[donor] -= 1.0;
    balances[recipient] += 1.0;
    --parked[donor];
  }
  return moves;
}

MatchOutcome greedy_match(int traveler_count, const std::vector<VehicleId>& vehicles,
                          const EtaFn& eta, double max_wait_s) {
  MatchOutcome out;
  std::vector<char> taken(vehicles.size(), 0);
  for (int t = 0; t < traveler_count; ++t) {
    double best = std::numeric_limits<double>::infinity();
    int best_i = -1;
    for (std::size_t i = 0; i < vehicles.size(); ++i) {
      if (taken[i]) continue;
      const auto e = eta(vehicles[i], t);
      if (!e) continue;
      if (*e < best || (*e == best && best_i >= 0 && vehicles[i] < vehicles[best_i])) {
        best = *e;
        best_i = static_cast<int>(i);
      }
    }
    if (best_i >= 0 && best <= max_wait_s) {
      taken[best_i] = 1;
      out.assignments.push_back({t, vehicles[best_i], best});
    } else {
      out.waitlisted.push_back(t);
    }
  }
  return out;
}

Dispatcher::Dispatcher(const Network& net, const OdMatrix& od, FlowModel& flow,
                       const DispatchConfig& cfg, Rng& rng)
    : net_(net), od_(od), flow_(flow), cfg_(cfg), rng_(rng) {
  stations_.resize(net_.zone_count());
  station_series_.resize(net_.zone_count());
}

void Dispatcher::init_fleet(std::int64_t fleet_size) {
  std::vector<double> generations(net_.zone_count(), 0.0);
  for (ZoneIdx z = 0; z < net_.zone_count(); ++z)
    for (int h = 0; h < kHoursPerDay; ++h) generations[z] += od_.generation(h, z);
  const auto counts = initial_distribution(fleet_size, generations);
  VehicleId id = 0;
  for (ZoneIdx z = 0; z < net_.zone_count(); ++z) {
    for (std::int64_t k = 0; k < counts[z]; ++k) {
      Vehicle v;
      v.id = id++;
      v.state = VehicleState::parked;
      v.zone = z;
      stations_[z].insert(v.id);
      vehicles_.push_back(v);
    }
  }
}

void Dispatcher::handle_new_requests(std::vector<TripRequest> reqs) {
  for (TripRequest& r : reqs) {
    if (r.id != static_cast<std::int64_t>(requests_.size()))
      throw InvariantViolation("request ids must arrive dense and in order");
    log_row(r.generation_s, "request", -1, r.id, net_.zone(r.origin).id, net_.zone(r.dest).id,
            -1.0);
    fresh_.push_back(r.id);
    requests_.push_back(std::move(r));
  }
}

std::vector<double> Dispatcher::distances_to_station(NodeIdx target,
                                                     const TravelTimeTable& table) const {
  // Reverse Dijkstra: generalized cost from every node to `target`.
  const int nn = net_.node_count();
  std::vector<double> dist(nn, std::numeric_limits<double>::infinity());
  dist[target] = 0.0;
  using QE = std::pair<double, NodeIdx>;
  std::priority_queue<QE, std::vector<QE>, std::greater<>> pq;
  pq.push({0.0, target});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    for (LinkIdx l : net_.in_links(u)) {
      const NodeIdx v = net_.link_from_idx(l);
      const double nd = d + link_cost(net_, table, l, cfg_.vot_weight);
      if (nd < dist[v]) {
        dist[v] = nd;
        pq.push({nd, v});
      }
    }
  }
  return dist;
}

std::optional<double> Dispatcher::vehicle_eta(const Vehicle& v,
                                              const std::vector<double>& dist_to_target,
                                              const TravelTimeTable& table) const {
  double eta = 0.0;
  NodeIdx anchor = kInvalidIdx;
  switch (v.state) {
    case VehicleState::parked:
      anchor = net_.station_node_idx(v.zone);
      break;
    case VehicleState::returning:
    case VehicleState::relocating: {
      const auto pos = flow_.position(v.id);
      if (pos.on_link) {
        const double elapsed = flow_.now_s() - pos.entered_s;
        eta += std::max(0.0, table.seconds[pos.link] - elapsed);
      }
      anchor = pos.node;
      break;
    }
    case VehicleState::occupied:
      // Remaining drop-off time, then the leg to the new traveler.
      eta += flow_.remaining_route_time_s(v.id, table);
      anchor = flow_.route_end_node(v.id);
      break;
    case VehicleState::picking_up:
      return std::nullopt;  // already committed to a traveler
  }
  const double d = dist_to_target[anchor];
  if (!std::isfinite(d)) return std::nullopt;
  return eta + d;
}

std::vector<LinkIdx> Dispatcher::choose_leg_route(NodeIdx from, NodeIdx to,
                                                  const TravelTimeTable& table) {
  if (from == to) return {};
  auto routes = k_shortest_routes(net_, table, from, to, cfg_.k_routes, cfg_.vot_weight);
  if (routes.empty())
    throw InvariantViolation("no route between stations " + std::to_string(from) + " -> " +
                             std::to_string(to));
  std::vector<double> costs(routes.size());
  for (std::size_t i = 0; i < routes.size(); ++i) costs[i] = routes[i].cost;
  return routes[logit_choice(costs, cfg_.logit_theta, rng_)].links;
}

ZoneIdx Dispatcher::vehicle_zone_now(const Vehicle& v) const {
  if (v.state != VehicleState::parked) {
    const auto pos = flow_.position(v.id);
    if (pos.on_link) return net_.zone_of_link(pos.link);
  }
  return v.zone;  // parked, or still queued at the station it is leaving
}

void Dispatcher::matching_tick(double t, const TravelTimeTable& table) {
  // FCFS: waitlisted travelers first (they were generated earlier), then the
  // fresh ones; both orders are (generation time, id).
  std::vector<std::int64_t> order = waitlist_;
  order.insert(order.end(), fresh_.begin(), fresh_.end());
  waitlist_.clear();
  fresh_.clear();

  // Per-tick cache of reverse-Dijkstra distances by target station node.
  std::vector<std::vector<double>> dist_cache(net_.zone_count());

  for (std::int64_t rid : order) {
    TripRequest& r = requests_[rid];
    auto& dist = dist_cache[r.origin];
    if (dist.empty()) dist = distances_to_station(net_.station_node_idx(r.origin), table);

    double best = std::numeric_limits<double>::infinity();
    VehicleId best_v = -1;
    for (const Vehicle& v : vehicles_) {
      if (v.state == VehicleState::picking_up) continue;
      if (v.reserved_request >= 0) continue;
      const auto e = vehicle_eta(v, dist, table);
      if (e && *e < best) {
        best = *e;
        best_v = v.id;  // vehicles_ scanned in id order, so ties keep the lower id
      }
    }
    if (best_v >= 0 && best <= cfg_.max_wait_s) {
      assign(vehicles_[best_v], r, t, best, table);
    } else {
      r.state = RequestState::waitlisted;
      waitlist_.push_back(rid);
      log_row(t, "waitlisted", -1, rid, net_.zone(r.origin).id, net_.zone(r.dest).id, -1.0);
    }
  }
  waitlist_series_.emplace_back(t, static_cast<int>(waitlist_.size()));
}

void Dispatcher::assign(Vehicle& v, TripRequest& r, double t, double eta,
                        const TravelTimeTable& table) {
  r.state = RequestState::assigned;
  r.assignment_s = t;
  if (v.state == VehicleState::occupied) {
    v.reserved_request = r.id;
    log_row(t, "reserved", v.id, r.id, net_.zone(vehicle_zone_now(v)).id,
            net_.zone(r.origin).id, eta);
    return;
  }
  log_row(t, "assigned", v.id, r.id, net_.zone(vehicle_zone_now(v)).id, net_.zone(r.origin).id,
          eta);
  if (v.state == VehicleState::parked) {
    stations_[v.zone].erase(v.id);
    v.state = transition(v.state, VehicleEvent::assigned);
    v.request = r.id;
    start_pickup_leg(v, r, t, table);
  } else {
    // returning or relocating: preempt the current leg.
    v.state = transition(v.state, VehicleEvent::assigned);
    v.request = r.id;
    v.relocation_target = kInvalidIdx;
    const NodeIdx target = net_.station_node_idx(r.origin);
    const auto pos = flow_.position(v.id);
    auto tail = choose_leg_route(pos.node, target, table);
    if (!pos.on_link && tail.empty()) {
      // Still at the station it was about to leave, which is the pickup
      // point: withdraw the old leg entirely.
      flow_.cancel(v.id);
      reached_pickup(v, t, table);
    } else {
      flow_.retarget(v.id, std::move(tail));
    }
  }
}

void Dispatcher::start_pickup_leg(Vehicle& v, TripRequest& r, double t,
                                  const TravelTimeTable& table) {
  const NodeIdx from = net_.station_node_idx(v.zone);
  const NodeIdx to = net_.station_node_idx(r.origin);
  auto route = choose_leg_route(from, to, table);
  if (route.empty()) {
    reached_pickup(v, t, table);
    return;
  }
  log_row(t, "pickup_leg", v.id, r.id, net_.zone(v.zone).id, net_.zone(r.origin).id, -1.0);
  flow_.add_departure(v.id, std::move(route), t, /*empty_run=*/true);
}

void Dispatcher::reached_pickup(Vehicle& v, double t, const TravelTimeTable& table) {
  TripRequest& r = requests_[v.request];
  v.state = transition(v.state, VehicleEvent::reached_pickup);
  r.state = RequestState::riding;
  r.pickup_s = t;
  log_row(t, "pickup", v.id, r.id, net_.zone(r.origin).id, net_.zone(r.dest).id, -1.0);
  const NodeIdx from = net_.station_node_idx(r.origin);
  const NodeIdx to = net_.station_node_idx(r.dest);
  auto route = choose_leg_route(from, to, table);
  v.zone = r.origin;
  if (route.empty()) {
    reached_destination(v, t, table);
    return;
  }
  flow_.add_departure(v.id, std::move(route), t + cfg_.dwell_s, /*empty_run=*/false);
}

void Dispatcher::reached_destination(Vehicle& v, double t, const TravelTimeTable& table) {
  TripRequest& r = requests_[v.request];
  r.state = RequestState::completed;
  r.arrival_s = t;
  log_row(t, "dropoff", v.id, r.id, net_.zone(r.origin).id, net_.zone(r.dest).id, -1.0);
  v.state = transition(v.state, VehicleEvent::reached_destination);
  v.request = -1;
  v.zone = r.dest;
  if (v.reserved_request >= 0) {
    TripRequest& nxt = requests_[v.reserved_request];
    v.state = transition(v.state, VehicleEvent::assigned);
    v.request = nxt.id;
    v.reserved_request = -1;
    start_pickup_leg(v, nxt, t, table);
    return;
  }
  // Drop-off happens at the destination zone's station, so the return leg is
  // immediate: returning -> parked at the same instant.
  reached_station(v, r.dest, t);
}

void Dispatcher::reached_station(Vehicle& v, ZoneIdx zone, double t) {
  v.state = transition(v.state, VehicleEvent::reached_station);
  v.zone = zone;
  v.relocation_target = kInvalidIdx;
  stations_[zone].insert(v.id);
  log_row(t, "parked", v.id, -1, net_.zone(zone).id, net_.zone(zone).id, -1.0);
}

void Dispatcher::on_arrival(VehicleId vid, double t, const TravelTimeTable& table) {
  Vehicle& v = vehicles_[vid];
  switch (v.state) {
    case VehicleState::picking_up:
      v.zone = requests_[v.request].origin;
      reached_pickup(v, t, table);
      break;
    case VehicleState::occupied:
      reached_destination(v, t, table);
      break;
    case VehicleState::relocating:
      reached_station(v, v.relocation_target, t);
      break;
    case VehicleState::returning:
      reached_station(v, v.zone, t);
      break;
    default:
      throw InvariantViolation("arrival for a vehicle not on a leg");
  }
}

void Dispatcher::relocation_tick(double t, const TravelTimeTable& table) {
  if (vehicles_.empty()) return;
  BlockBalanceReport rep;
  rep.time_s = t;
  rep.savs_total = static_cast<double>(vehicles_.size());
  rep.demand_total = od_.expected_generation_total(t, t + cfg_.relocation_period_s);

  const int zc = net_.zone_count();
  std::vector<double> balances(zc, 0.0);
  std::vector<int> parked(zc, 0);
  for (ZoneIdx z = 0; z < zc; ++z) {
    parked[z] = static_cast<int>(stations_[z].size());
    const double demand_block = od_.expected_generation(z, t, t + cfg_.relocation_period_s);
    balances[z] = block_balance(static_cast<double>(parked[z]), rep.savs_total, demand_block,
                                rep.demand_total);
    rep.entries.push_back({z, balances[z], parked[z], demand_block});
  }

  rep.moves = plan_relocation(balances, parked, net_, cfg_.thresholds, cfg_.relocation_radius);
  for (const RelocationMove& m : rep.moves) {
    auto& donors = stations_[m.donor];
    const VehicleId vid = *donors.begin();  // smallest id
    donors.erase(donors.begin());
    Vehicle& v = vehicles_[vid];
    v.state = transition(v.state, VehicleEvent::relocation_ordered);
    v.relocation_target = m.recipient;
    const NodeIdx from = net_.station_node_idx(m.donor);
    const NodeIdx to = net_.station_node_idx(m.recipient);
    auto route = choose_leg_route(from, to, table);
    log_row(t, "relocation_ordered", vid, -1, net_.zone(m.donor).id, net_.zone(m.recipient).id,
            -1.0);
    if (route.empty()) {
      reached_station(v, m.recipient, t);
    } else {
      flow_.add_departure(vid, std::move(route), t, /*empty_run=*/true);
    }
  }
  for (ZoneIdx z = 0; z < zc; ++z)
    if (balances[z] > cfg_.thresholds.upper || balances[z] < cfg_.thresholds.lower)
      rep.residual_imbalance.push_back(z);
  balance_reports_.push_back(std::move(rep));
}

void Dispatcher::sample_station_occupancy(double t) {
  if (t < cfg_.report_start_s || t >= cfg_.report_end_s) return;
  for (ZoneIdx z = 0; z < net_.zone_count(); ++z)
    station_series_[z].push_back(static_cast<int>(stations_[z].size()));
}

void Dispatcher::log_row(double t, std::string event, VehicleId v, std::int64_t req, ExtId oz,
                         ExtId dz, double eta) {
  log_.push_back({t, std::move(event), v, req, oz, dz, eta});
}

}  // namespace savsim
