#pragma once

#include <span>
#include <unordered_map>
#include <vector>

#include "savsim/types.hpp"

namespace savsim {

struct Node {
  ExtId id{};
  double x{};  // planar meters
  double y{};
};

struct Link {
  ExtId id{};
  ExtId from{};
  ExtId to{};
  double length_m{};
  int lanes{1};
  double ffs_kmh{};      // free-flow speed
  double cap_vphpl{};    // capacity, vehicles/hour/lane
  double jam_vpkmpl{};   // jam density, vehicles/km/lane
  double green_ratio{1.0};
  double toll{0.0};
  ExtId zone_id{};
};

struct Zone {
  ExtId id{};
  std::array<double, kLandUseCount> land_use_m2{};
  std::int64_t households{};
  ExtId station_node{};
  std::vector<ExtId> neighbors;
};

// Validated road network + zone system. Read-only after build(); routing and
// the flow model treat it as shared immutable state.
class Network {
 public:
  static Network build(std::vector<Node> nodes, std::vector<Link> links,
                       std::vector<Zone> zones);

  int node_count() const { return static_cast<int>(nodes_.size()); }
  int link_count() const { return static_cast<int>(links_.size()); }
  int zone_count() const { return static_cast<int>(zones_.size()); }

  const Node& node(NodeIdx i) const { return nodes_[i]; }
  const Link& link(LinkIdx i) const { return links_[i]; }
  const Zone& zone(ZoneIdx i) const { return zones_[i]; }

  NodeIdx node_index(ExtId id) const;
  LinkIdx link_index(ExtId id) const;
  ZoneIdx zone_index(ExtId id) const;

  // Derived per-link quantities (triangular fundamental diagram).
  double free_flow_time_s(LinkIdx i) const { return fft_s_[i]; }
  double capacity_vps(LinkIdx i) const { return cap_vps_[i]; }  // effective, all lanes
  double storage_veh(LinkIdx i) const { return storage_veh_[i]; }
  double backward_wave_tt_s(LinkIdx i) const { return bwd_tt_s_[i]; }

  std::span<const LinkIdx> out_links(NodeIdx n) const;
  std::span<const LinkIdx> in_links(NodeIdx n) const;

  ZoneIdx zone_of_link(LinkIdx i) const { return link_zone_[i]; }
  NodeIdx link_from_idx(LinkIdx i) const { return from_idx_[i]; }
  NodeIdx link_to_idx(LinkIdx i) const { return to_idx_[i]; }
  NodeIdx station_node_idx(ZoneIdx z) const { return station_node_[z]; }
  std::span<const ZoneIdx> zone_neighbors(ZoneIdx z) const;
  double zone_area_m2(ZoneIdx z) const;

  // Zones whose station could not be reached from any other station. A
  // warning at build time; the runner escalates to an error when such a zone
  // carries demand.
  const std::vector<ZoneIdx>& unreachable_stations() const { return unreachable_stations_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  Network() = default;

  std::vector<Node> nodes_;
  std::vector<Link> links_;
  std::vector<Zone> zones_;

  std::unordered_map<ExtId, NodeIdx> node_by_id_;
  std::unordered_map<ExtId, LinkIdx> link_by_id_;
  std::unordered_map<ExtId, ZoneIdx> zone_by_id_;

  std::vector<double> fft_s_;
  std::vector<double> cap_vps_;
  std::vector<double> storage_veh_;
  std::vector<double> bwd_tt_s_;
  std::vector<ZoneIdx> link_zone_;
  std::vector<NodeIdx> from_idx_, to_idx_;
  std::vector<NodeIdx> station_node_;

  // CSR adjacency
  std::vector<std::int32_t> out_offsets_, in_offsets_;
  std::vector<LinkIdx> out_links_, in_links_;
  std::vector<std::int32_t> nb_offsets_;
  std::vector<ZoneIdx> nb_zones_;

  std::vector<ZoneIdx> unreachable_stations_;
  std::vector<std::string> warnings_;
};

// Per-link travel-time estimates used for routing and dispatch ETAs,
// refreshed on a fixed cadence. Entries never drop below free-flow time.
struct TravelTimeTable {
  std::vector<double> seconds;
  double updated_at_s{0.0};

  static TravelTimeTable free_flow(const Network& net);
};

}  // namespace savsim
