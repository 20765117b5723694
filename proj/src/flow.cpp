#include "savsim/flow.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <queue>

namespace savsim {

std::vector<int> ration_proportional(const std::vector<int>& demands, int capacity) {
  std::vector<int> out(demands.size(), 0);
  if (capacity <= 0) return out;
  long long total = std::accumulate(demands.begin(), demands.end(), 0LL);
  if (total <= capacity) return demands;

  std::vector<double> rem(demands.size());
  long long assigned = 0;
  for (std::size_t i = 0; i < demands.size(); ++i) {
    const double share = static_cast<double>(capacity) * demands[i] / static_cast<double>(total);
    out[i] = static_cast<int>(share);
    rem[i] = share - out[i];
    assigned += out[i];
  }
  std::vector<std::size_t> order(demands.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&rem](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; assigned < capacity && k < order.size(); ++k) {
    const std::size_t i = order[k];
    if (out[i] < demands[i]) {
      ++out[i];
      ++assigned;
    }
  }
  return out;
}

namespace {

int steps_for(double duration_s, double dt) {
  return std::max(1, static_cast<int>(std::ceil(duration_s / dt - 1e-9)));
}

}  // namespace

FlowModel::FlowModel(const Network& net, double dt_s) : net_(net), dt_(dt_s) {
  if (!(dt_ > 0)) throw ValidationError("FlowModel: dt must be positive");
  const int lc = net_.link_count();
  links_rt_.resize(lc);
  fft_steps_.resize(lc);
  bwd_steps_.resize(lc);
  for (int l = 0; l < lc; ++l) {
    fft_steps_[l] = steps_for(net_.free_flow_time_s(l), dt_);
    bwd_steps_[l] = steps_for(net_.backward_wave_tt_s(l), dt_);
    links_rt_[l].out_hist.assign(bwd_steps_[l] + 1, 0);
    // An idle link banks one full vehicle of capacity, so a lone vehicle is
    // never delayed by the integer capacity grid.
    const double cap = net_.capacity_vps(l) * dt_;
    const double bank = std::max(1.0, cap);
    links_rt_[l].send_res = bank - cap;
    links_rt_[l].recv_res = bank - cap;
  }
  origin_q_.resize(net_.node_count());
}

const FlowModel::VehicleRt& FlowModel::rt(VehicleId v) const {
  if (v < 0 || v >= static_cast<VehicleId>(vehicle_slot_.size()) || vehicle_slot_[v] < 0)
    throw InvariantViolation("unknown vehicle " + std::to_string(v));
  return vehicles_[vehicle_slot_[v]];
}

FlowModel::VehicleRt& FlowModel::rt(VehicleId v) {
  return const_cast<VehicleRt&>(static_cast<const FlowModel*>(this)->rt(v));
}

void FlowModel::add_departure(VehicleId v, std::vector<LinkIdx> route, double depart_s,
                              bool empty_run) {
  if (route.empty()) throw InvariantViolation("add_departure: empty route");
  for (std::size_t i = 1; i < route.size(); ++i) {
    if (net_.link_to_idx(route[i - 1]) != net_.link_from_idx(route[i]))
      throw InvariantViolation("add_departure: route not contiguous");
  }
  const auto dep_step = static_cast<std::int64_t>(std::llround(depart_s / dt_));
  if (dep_step < step_) throw InvariantViolation("add_departure: departure in the past");

  if (v >= static_cast<VehicleId>(vehicle_slot_.size())) vehicle_slot_.resize(v + 1, -1);
  if (vehicle_slot_[v] < 0) {
    vehicle_slot_[v] = static_cast<std::int32_t>(vehicles_.size());
    vehicles_.emplace_back();
  } else {
    const VehicleRt& prev = vehicles_[vehicle_slot_[v]];
    if (prev.activity != Activity::idle)
      throw InvariantViolation("add_departure: vehicle already active");
  }
  VehicleRt& r = vehicles_[vehicle_slot_[v]];
  r = VehicleRt{};
  r.route = std::move(route);
  r.empty_run = empty_run;
  r.activity = Activity::pending;
  pending_.push_back({dep_step, v});
  std::push_heap(pending_.begin(), pending_.end(), std::greater<>());
}

void FlowModel::retarget(VehicleId v, std::vector<LinkIdx> tail) {
  VehicleRt& r = rt(v);
  if (r.activity == Activity::idle) throw InvariantViolation("retarget: vehicle not active");
  NodeIdx anchor;
  if (r.activity == Activity::on_link) {
    anchor = net_.link_to_idx(r.route[r.route_pos]);
    r.route.erase(r.route.begin() + r.route_pos + 1, r.route.end());
  } else {
    if (tail.empty()) throw InvariantViolation("retarget: queued vehicle needs a route");
    anchor = net_.link_from_idx(r.route[0]);
    r.route.clear();
    r.route_pos = 0;
  }
  for (std::size_t i = 0; i < tail.size(); ++i) {
    const NodeIdx want = i == 0 ? anchor : net_.link_to_idx(tail[i - 1]);
    if (net_.link_from_idx(tail[i]) != want)
      throw InvariantViolation("retarget: tail not contiguous with position");
  }
  r.route.insert(r.route.end(), tail.begin(), tail.end());
}

void FlowModel::cancel(VehicleId v) {
  VehicleRt& r = rt(v);
  if (r.activity == Activity::pending) {
    auto it = std::find_if(pending_.begin(), pending_.end(),
                           [v](const PendingDeparture& d) { return d.vehicle == v; });
    pending_.erase(it);
    std::make_heap(pending_.begin(), pending_.end(), std::greater<>());
  } else if (r.activity == Activity::queued) {
    auto& q = origin_q_[net_.link_from_idx(r.route[0])];
    q.erase(std::find(q.begin(), q.end(), v));
    --injected_;
  } else {
    throw InvariantViolation("cancel: vehicle already entered a link");
  }
  r.activity = Activity::idle;
}

FlowModel::Position FlowModel::position(VehicleId v) const {
  const VehicleRt& r = rt(v);
  Position p;
  if (r.activity == Activity::on_link) {
    p.on_link = true;
    p.link = r.route[r.route_pos];
    p.node = net_.link_to_idx(p.link);
    p.entered_s = static_cast<double>(r.entry_step) * dt_;
  } else if (r.activity == Activity::queued || r.activity == Activity::pending) {
    p.on_link = false;
    p.node = net_.link_from_idx(r.route[0]);
  } else {
    throw InvariantViolation("position: vehicle not active");
  }
  return p;
}

double FlowModel::remaining_route_time_s(VehicleId v, const TravelTimeTable& table) const {
  const VehicleRt& r = rt(v);
  double t = 0.0;
  std::size_t from = 0;
  if (r.activity == Activity::on_link) {
    const LinkIdx cur = r.route[r.route_pos];
    const double elapsed = (static_cast<double>(step_) - static_cast<double>(r.entry_step)) * dt_;
    t += std::max(0.0, table.seconds[cur] - elapsed);
    from = static_cast<std::size_t>(r.route_pos) + 1;
  }
  for (std::size_t i = from; i < r.route.size(); ++i) t += table.seconds[r.route[i]];
  return t;
}

NodeIdx FlowModel::route_end_node(VehicleId v) const {
  const VehicleRt& r = rt(v);
  return net_.link_to_idx(r.route.back());
}

int FlowModel::eligible_exits(const LinkRt& lr) const {
  // Exit eligibility is monotone along the FIFO queue.
  int n = 0;
  for (const OnLinkVehicle& ov : lr.q) {
    if (ov.exit_eligible_step <= step_) ++n;
    else break;
  }
  return n;
}

std::int64_t FlowModel::out_hist_at(LinkIdx l, std::int64_t s) const {
  if (s < 0) return 0;
  const auto& hist = links_rt_[l].out_hist;
  return hist[static_cast<std::size_t>(s % static_cast<std::int64_t>(hist.size()))];
}

double FlowModel::sending_flow(LinkIdx l) const {
  const LinkRt& lr = links_rt_[l];
  const double cap = net_.capacity_vps(l) * dt_;
  return std::max(0.0, std::min(static_cast<double>(eligible_exits(lr)), cap));
}

double FlowModel::receiving_flow(LinkIdx l) const {
  const LinkRt& lr = links_rt_[l];
  const double cap = net_.capacity_vps(l) * dt_;
  const double freed = static_cast<double>(out_hist_at(l, step_ - bwd_steps_[l]));
  const double slack = freed + net_.storage_veh(l) - static_cast<double>(lr.n_in);
  return std::max(0.0, std::min(cap, slack));
}

std::vector<Arrival> FlowModel::advance() {
  const std::int64_t s = step_;
  const double t = static_cast<double>(s) * dt_;
  std::vector<Arrival> arrivals;
  const std::size_t events_before = events_.size();

  // Departures whose time has come join their origin's vertical queue,
  // ordered by (departure step, vehicle id).
  while (!pending_.empty() && pending_.front().step <= s) {
    std::pop_heap(pending_.begin(), pending_.end(), std::greater<>());
    const PendingDeparture d = pending_.back();
    pending_.pop_back();
    VehicleRt& r = rt(d.vehicle);
    r.activity = Activity::queued;
    origin_q_[net_.link_from_idx(r.route[0])].push_back(d.vehicle);
    ++injected_;
  }

  // Integer capacity allowances for this step. The fractional carry banks at
  // most one whole vehicle while a link is idle; under saturation the stream
  // emits the capacity exactly.
  const int lc = net_.link_count();
  std::vector<int> send_allow(lc), recv_cap(lc);
  std::vector<double> send_avail(lc), recv_avail(lc);
  std::vector<int> send_used(lc, 0);
  for (int l = 0; l < lc; ++l) {
    LinkRt& lr = links_rt_[l];
    const double cap = net_.capacity_vps(l) * dt_;
    send_avail[l] = lr.send_res + cap;
    recv_avail[l] = lr.recv_res + cap;
    send_allow[l] = static_cast<int>(send_avail[l] + 1e-9);
    recv_cap[l] = static_cast<int>(recv_avail[l] + 1e-9);
  }

  auto do_exit = [&](LinkIdx l, LinkRt& lr) {
    const OnLinkVehicle ov = lr.q.front();
    lr.q.pop_front();
    ++lr.n_out;
    ++send_used[l];
    lr.win_dur_sum += (static_cast<double>(s) - static_cast<double>(ov.entry_step)) * dt_;
    ++lr.win_exits;
    VehicleRt& r = rt(ov.id);
    events_.push_back({t, ov.id, net_.link(l).id, true, r.empty_run});
    return ov.id;
  };
  auto do_enter = [&](VehicleId v, LinkIdx l) {
    LinkRt& lr = links_rt_[l];
    ++lr.n_in;
    lr.q.push_back({v, s, s + fft_steps_[l]});
    VehicleRt& r = rt(v);
    r.activity = Activity::on_link;
    r.entry_step = s;
    events_.push_back({t, v, net_.link(l).id, false, r.empty_run});
  };

  std::vector<int> accepted(lc, 0);
  std::vector<int> recv_limit(lc, 0);

  for (NodeIdx n = 0; n < net_.node_count(); ++n) {
    const auto in_ls = net_.in_links(n);
    const auto out_ls = net_.out_links(n);
    auto& oq = origin_q_[n];

    // Receiving limits for every outgoing link, evaluated on the state at
    // the start of this node's processing.
    for (LinkIdx e : out_ls) {
      const LinkRt& lr = links_rt_[e];
      const double freed = static_cast<double>(out_hist_at(e, s - bwd_steps_[e]));
      const double slack = freed + net_.storage_veh(e) - static_cast<double>(lr.n_in);
      recv_limit[e] = std::max(0, std::min(recv_cap[e], static_cast<int>(slack + 1e-9)));
      accepted[e] = 0;
    }

    if (!in_ls.empty()) {
      // Sending prefixes and per-movement demands.
      std::vector<int> snd(in_ls.size(), 0);
      // demand[out-local][in-local]
      std::vector<std::vector<int>> demand(out_ls.size(), std::vector<int>(in_ls.size(), 0));
      auto out_local = [&](LinkIdx e) {
        return static_cast<std::size_t>(std::find(out_ls.begin(), out_ls.end(), e) -
                                        out_ls.begin());
      };
      bool any = false;
      for (std::size_t ii = 0; ii < in_ls.size(); ++ii) {
        const LinkIdx l = in_ls[ii];
        LinkRt& lr = links_rt_[l];
        snd[ii] = std::min(eligible_exits(lr), send_allow[l]);
        for (int k = 0; k < snd[ii]; ++k) {
          const VehicleRt& r = rt(lr.q[k].id);
          if (static_cast<std::size_t>(r.route_pos) + 1 < r.route.size()) {
            const LinkIdx nxt = r.route[r.route_pos + 1];
            assert(net_.link_from_idx(nxt) == n);
            ++demand[out_local(nxt)][ii];
          }
          // else: retiring at this node, no downstream demand
        }
        any = any || snd[ii] > 0;
      }

      if (any) {
        // Proportional rationing when an outgoing link is oversubscribed.
        std::vector<std::vector<int>> alloc(out_ls.size());
        for (std::size_t oo = 0; oo < out_ls.size(); ++oo)
          alloc[oo] = ration_proportional(demand[oo], recv_limit[out_ls[oo]]);

        // Strict FIFO: a blocked head vehicle also blocks the rest of its link.
        for (std::size_t ii = 0; ii < in_ls.size(); ++ii) {
          const LinkIdx l = in_ls[ii];
          LinkRt& lr = links_rt_[l];
          for (int k = 0; k < snd[ii]; ++k) {
            const VehicleId vid = lr.q.front().id;
            VehicleRt& r = rt(vid);
            if (static_cast<std::size_t>(r.route_pos) + 1 == r.route.size()) {
              do_exit(l, lr);
              r.activity = Activity::idle;
              ++retired_;
              arrivals.push_back({vid, t});
              continue;
            }
            const LinkIdx nxt = r.route[r.route_pos + 1];
            auto& a = alloc[out_local(nxt)][ii];
            if (a <= 0) break;
            --a;
            ++accepted[nxt];
            do_exit(l, lr);
            ++r.route_pos;
            do_enter(vid, nxt);
          }
        }
      }
    }

    // Origin-queue injections take whatever acceptance is left.
    while (!oq.empty()) {
      const VehicleId vid = oq.front();
      VehicleRt& r = rt(vid);
      const LinkIdx f = r.route[0];
      if (accepted[f] >= recv_limit[f]) break;
      ++accepted[f];
      oq.pop_front();
      do_enter(vid, f);
    }
  }

  for (int l = 0; l < lc; ++l) {
    LinkRt& lr = links_rt_[l];
    lr.out_hist[static_cast<std::size_t>(s % static_cast<std::int64_t>(lr.out_hist.size()))] =
        lr.n_out;
    const double bank = std::max(1.0, net_.capacity_vps(l) * dt_);
    lr.send_res = std::min(send_avail[l] - send_used[l], bank);
    lr.recv_res = std::min(recv_avail[l] - accepted[l], bank);
  }

  // Canonical per-step event order: by link id, stable so that per-link FIFO
  // order is preserved.
  std::stable_sort(events_.begin() + static_cast<std::ptrdiff_t>(events_before), events_.end(),
                   [](const TraversalEvent& a, const TraversalEvent& b) { return a.link < b.link; });

  ++step_;
  return arrivals;
}

void FlowModel::refresh_travel_times(TravelTimeTable& table) {
  for (int l = 0; l < net_.link_count(); ++l) {
    LinkRt& lr = links_rt_[l];
    if (lr.win_exits > 0) {
      table.seconds[l] =
          std::max(net_.free_flow_time_s(l), lr.win_dur_sum / static_cast<double>(lr.win_exits));
      lr.win_dur_sum = 0.0;
      lr.win_exits = 0;
    }
  }
  table.updated_at_s = now_s();
}

FlowModel::Counts FlowModel::counts() const {
  Counts c;
  c.injected = injected_;
  c.retired = retired_;
  std::int64_t on = 0;
  for (const auto& q : origin_q_) on += static_cast<std::int64_t>(q.size());
  for (const auto& lr : links_rt_) on += static_cast<std::int64_t>(lr.q.size());
  c.on_network = on;
  return c;
}

}  // namespace savsim
