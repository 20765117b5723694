#include "savsim/network.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>

namespace savsim {

LandUse land_use_from_name(std::string_view name) {
  for (int i = 0; i < kLandUseCount; ++i) {
    if (kLandUseNames[i] == name) return static_cast<LandUse>(i);
  }
  throw ValidationError("unknown land use type: " + std::string(name));
}

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ValidationError(msg); }

std::string id_str(ExtId id) { return std::to_string(id); }

}  // namespace

Network Network::build(std::vector<Node> nodes, std::vector<Link> links,
                       std::vector<Zone> zones) {
  Network net;
  net.nodes_ = std::move(nodes);
  net.links_ = std::move(links);
  net.zones_ = std::move(zones);

  for (std::size_t i = 0; i < net.nodes_.size(); ++i) {
    const Node& n = net.nodes_[i];
    if (!std::isfinite(n.x) || !std::isfinite(n.y))
      fail("node " + id_str(n.id) + ": non-finite coordinates");
    if (!net.node_by_id_.emplace(n.id, static_cast<NodeIdx>(i)).second)
      fail("duplicate node id " + id_str(n.id));
  }
  for (std::size_t i = 0; i < net.zones_.size(); ++i) {
    const Zone& z = net.zones_[i];
    if (!net.zone_by_id_.emplace(z.id, static_cast<ZoneIdx>(i)).second)
      fail("duplicate zone id " + id_str(z.id));
    for (double a : z.land_use_m2)
      if (a < 0 || !std::isfinite(a)) fail("zone " + id_str(z.id) + ": negative land use area");
    if (z.households < 0) fail("zone " + id_str(z.id) + ": negative households");
  }

  const int nn = net.node_count();
  net.fft_s_.reserve(net.links_.size());
  for (std::size_t i = 0; i < net.links_.size(); ++i) {
    const Link& l = net.links_[i];
    if (!net.link_by_id_.emplace(l.id, static_cast<LinkIdx>(i)).second)
      fail("duplicate link id " + id_str(l.id));
    if (!net.node_by_id_.count(l.from))
      fail("link " + id_str(l.id) + ": dangling from-node " + id_str(l.from));
    if (!net.node_by_id_.count(l.to))
      fail("link " + id_str(l.id) + ": dangling to-node " + id_str(l.to));
    if (!net.zone_by_id_.count(l.zone_id))
      fail("link " + id_str(l.id) + ": dangling zone " + id_str(l.zone_id));
    if (!(l.length_m > 0)) fail("link " + id_str(l.id) + ": non-positive length");
    if (l.lanes < 1) fail("link " + id_str(l.id) + ": lanes < 1");
    if (!(l.ffs_kmh > 0)) fail("link " + id_str(l.id) + ": non-positive free-flow speed");
    if (!(l.cap_vphpl > 0)) fail("link " + id_str(l.id) + ": non-positive capacity");
    if (!(l.jam_vpkmpl > 0)) fail("link " + id_str(l.id) + ": non-positive jam density");
    if (!(l.green_ratio > 0) || l.green_ratio > 1.0)
      fail("link " + id_str(l.id) + ": green_ratio outside (0,1]");
    if (l.toll < 0) fail("link " + id_str(l.id) + ": negative toll");

    // Backward wave of the triangular diagram must be finite and negative:
    // jam density has to exceed the critical density cap/ffs (per lane).
    const double crit_vpkmpl = l.cap_vphpl / l.ffs_kmh;
    if (!(l.jam_vpkmpl > crit_vpkmpl))
      fail("link " + id_str(l.id) + ": jam density " + std::to_string(l.jam_vpkmpl) +
           " not above critical density " + std::to_string(crit_vpkmpl));

    const double vf_mps = l.ffs_kmh / 3.6;
    const double q_eff_lane_vps = l.cap_vphpl * l.green_ratio / 3600.0;
    const double kj_lane_vpm = l.jam_vpkmpl / 1000.0;
    const double kc_lane_vpm = q_eff_lane_vps / vf_mps;
    const double wave_mps = q_eff_lane_vps / (kj_lane_vpm - kc_lane_vpm);

    net.fft_s_.push_back(l.length_m / vf_mps);
    net.cap_vps_.push_back(q_eff_lane_vps * l.lanes);
    net.storage_veh_.push_back(kj_lane_vpm * l.length_m * l.lanes);
    net.bwd_tt_s_.push_back(l.length_m / wave_mps);
    net.link_zone_.push_back(net.zone_by_id_.at(l.zone_id));
    net.from_idx_.push_back(net.node_by_id_.at(l.from));
    net.to_idx_.push_back(net.node_by_id_.at(l.to));

    if (net.storage_veh_.back() < 1.0)
      fail("link " + id_str(l.id) + ": storage below one vehicle, link unusable");
  }

  // CSR adjacency.
  net.out_offsets_.assign(nn + 1, 0);
  net.in_offsets_.assign(nn + 1, 0);
  for (const Link& l : net.links_) {
    ++net.out_offsets_[net.node_by_id_.at(l.from) + 1];
    ++net.in_offsets_[net.node_by_id_.at(l.to) + 1];
  }
  for (int i = 0; i < nn; ++i) {
    net.out_offsets_[i + 1] += net.out_offsets_[i];
    net.in_offsets_[i + 1] += net.in_offsets_[i];
  }
  net.out_links_.resize(net.links_.size());
  net.in_links_.resize(net.links_.size());
  {
    std::vector<std::int32_t> op(net.out_offsets_.begin(), net.out_offsets_.end() - 1);
    std::vector<std::int32_t> ip(net.in_offsets_.begin(), net.in_offsets_.end() - 1);
    for (std::size_t i = 0; i < net.links_.size(); ++i) {
      const Link& l = net.links_[i];
      net.out_links_[op[net.node_by_id_.at(l.from)]++] = static_cast<LinkIdx>(i);
      net.in_links_[ip[net.node_by_id_.at(l.to)]++] = static_cast<LinkIdx>(i);
    }
  }
  // Deterministic order within a node: ascending link id.
  for (int n = 0; n < nn; ++n) {
    auto by_id = [&net](LinkIdx a, LinkIdx b) { return net.links_[a].id < net.links_[b].id; };
    std::sort(net.out_links_.begin() + net.out_offsets_[n],
              net.out_links_.begin() + net.out_offsets_[n + 1], by_id);
    std::sort(net.in_links_.begin() + net.in_offsets_[n],
              net.in_links_.begin() + net.in_offsets_[n + 1], by_id);
  }

  // Zone wiring: stations and neighbor CSR, symmetry check.
  std::set<std::pair<ZoneIdx, ZoneIdx>> nb_pairs;
  net.nb_offsets_.assign(net.zone_count() + 1, 0);
  for (int z = 0; z < net.zone_count(); ++z) {
    const Zone& zone = net.zones_[z];
    auto it = net.node_by_id_.find(zone.station_node);
    if (it == net.node_by_id_.end())
      fail("zone " + id_str(zone.id) + ": station node " + id_str(zone.station_node) +
           " does not exist");
    net.station_node_.push_back(it->second);
    for (ExtId nb : zone.neighbors) {
      auto zi = net.zone_by_id_.find(nb);
      if (zi == net.zone_by_id_.end())
        fail("zone " + id_str(zone.id) + ": dangling neighbor zone " + id_str(nb));
      nb_pairs.emplace(static_cast<ZoneIdx>(z), zi->second);
    }
  }
  for (const auto& [a, b] : nb_pairs) {
    if (!nb_pairs.count({b, a}))
      fail("zone neighbor relation not symmetric: " + id_str(net.zones_[a].id) + " -> " +
           id_str(net.zones_[b].id));
  }
  for (const auto& [a, b] : nb_pairs) ++net.nb_offsets_[a + 1];
  for (int z = 0; z < net.zone_count(); ++z) net.nb_offsets_[z + 1] += net.nb_offsets_[z];
  net.nb_zones_.resize(nb_pairs.size());
  {
    std::vector<std::int32_t> p(net.nb_offsets_.begin(), net.nb_offsets_.end() - 1);
    for (const auto& [a, b] : nb_pairs) net.nb_zones_[p[a]++] = b;  // set order: sorted
  }

  // Station reachability: BFS over the link graph from every station; a
  // zone's station must be reachable from at least one other station.
  const int zc = net.zone_count();
  std::vector<char> reachable_from_other(zc, 0);
  for (int zs = 0; zs < zc; ++zs) {
    std::vector<char> seen(nn, 0);
    std::deque<NodeIdx> bfs{net.station_node_[zs]};
    seen[net.station_node_[zs]] = 1;
    while (!bfs.empty()) {
      NodeIdx u = bfs.front();
      bfs.pop_front();
      for (LinkIdx l : net.out_links(u)) {
        NodeIdx v = net.to_idx_[l];
        if (!seen[v]) {
          seen[v] = 1;
          bfs.push_back(v);
        }
      }
    }
    for (int zt = 0; zt < zc; ++zt)
      if (zt != zs && seen[net.station_node_[zt]]) reachable_from_other[zt] = 1;
  }
  for (int z = 0; z < zc; ++z) {
    if (zc > 1 && !reachable_from_other[z]) {
      net.unreachable_stations_.push_back(z);
      std::ostringstream os;
      os << "zone " << net.zones_[z].id
         << ": station unreachable from every other zone's station";
      net.warnings_.push_back(os.str());
    }
  }

  return net;
}

NodeIdx Network::node_index(ExtId id) const {
  auto it = node_by_id_.find(id);
  if (it == node_by_id_.end()) throw ValidationError("unknown node id " + id_str(id));
  return it->second;
}

LinkIdx Network::link_index(ExtId id) const {
  auto it = link_by_id_.find(id);
  if (it == link_by_id_.end()) throw ValidationError("unknown link id " + id_str(id));
  return it->second;
}

ZoneIdx Network::zone_index(ExtId id) const {
  auto it = zone_by_id_.find(id);
  if (it == zone_by_id_.end()) throw ValidationError("unknown zone id " + id_str(id));
  return it->second;
}

std::span<const LinkIdx> Network::out_links(NodeIdx n) const {
  return {out_links_.data() + out_offsets_[n],
          static_cast<std::size_t>(out_offsets_[n + 1] - out_offsets_[n])};
}

std::span<const LinkIdx> Network::in_links(NodeIdx n) const {
  return {in_links_.data() + in_offsets_[n],
          static_cast<std::size_t>(in_offsets_[n + 1] - in_offsets_[n])};
}

std::span<const ZoneIdx> Network::zone_neighbors(ZoneIdx z) const {
  return {nb_zones_.data() + nb_offsets_[z],
          static_cast<std::size_t>(nb_offsets_[z + 1] - nb_offsets_[z])};
}

double Network::zone_area_m2(ZoneIdx z) const {
  double a = 0;
  for (double v : zones_[z].land_use_m2) a += v;
  return a;
}

TravelTimeTable TravelTimeTable::free_flow(const Network& net) {
  TravelTimeTable t;
  t.seconds.resize(net.link_count());
  for (int i = 0; i < net.link_count(); ++i) t.seconds[i] = net.free_flow_time_s(i);
  return t;
}

}  // namespace savsim
