#pragma once

#include <vector>

#include "savsim/fixtures.hpp"
#include "savsim/network.hpp"
#include "savsim/routing.hpp"

namespace savsim::test {

inline Link basic_link(ExtId id, ExtId from, ExtId to, double length_m, double ffs_kmh,
                       double cap_vphpl = 1800, ExtId zone = 1) {
  Link l;
  l.id = id;
  l.from = from;
  l.to = to;
  l.length_m = length_m;
  l.lanes = 1;
  l.ffs_kmh = ffs_kmh;
  l.cap_vphpl = cap_vphpl;
  l.jam_vpkmpl = 150;
  l.zone_id = zone;
  return l;
}

inline Zone basic_zone(ExtId id, ExtId station, std::vector<ExtId> neighbors = {}) {
  Zone z;
  z.id = id;
  z.station_node = station;
  z.neighbors = std::move(neighbors);
  return z;
}

// Two nodes joined by parallel links of 100 s and 120 s free-flow time.
inline Network parallel_paths_net() {
  std::vector<Node> nodes{{1, 0, 0}, {2, 3000, 0}};
  std::vector<Link> links{basic_link(1, 1, 2, 3000, 108),   // 100 s
                          basic_link(2, 1, 2, 3000, 90)};   // 120 s
  std::vector<Zone> zones{basic_zone(1, 1)};
  return Network::build(nodes, links, zones);
}

// 1 -> {2,3} -> 4 diamond, both paths 2 links.
inline Network diamond_net(double top_ffs = 60, double bottom_ffs = 50) {
  std::vector<Node> nodes{{1, 0, 0}, {2, 1000, 500}, {3, 1000, -500}, {4, 2000, 0}};
  std::vector<Link> links{basic_link(1, 1, 2, 1000, top_ffs),
                          basic_link(2, 2, 4, 1000, top_ffs),
                          basic_link(3, 1, 3, 1000, bottom_ffs),
                          basic_link(4, 3, 4, 1000, bottom_ffs)};
  std::vector<Zone> zones{basic_zone(1, 1)};
  return Network::build(nodes, links, zones);
}

inline Network grid_net(int n) {
  const GridFixture fx = make_grid({.n = n});
  return Network::build(fx.nodes, fx.links, fx.zones);
}

// Exhaustive loopless-path enumeration, the routing oracle.
inline void enumerate_paths_rec(const Network& net, NodeIdx at, NodeIdx dest,
                                std::vector<LinkIdx>& cur, std::vector<char>& visited,
                                std::size_t max_links, std::vector<std::vector<LinkIdx>>& out) {
  if (at == dest) {
    out.push_back(cur);
    return;
  }
  if (cur.size() >= max_links) return;
  for (LinkIdx l : net.out_links(at)) {
    const NodeIdx to = net.link_to_idx(l);
    if (visited[to]) continue;
    visited[to] = 1;
    cur.push_back(l);
    enumerate_paths_rec(net, to, dest, cur, visited, max_links, out);
    cur.pop_back();
    visited[to] = 0;
  }
}

inline std::vector<std::vector<LinkIdx>> enumerate_paths(const Network& net, NodeIdx origin,
                                                         NodeIdx dest, std::size_t max_links) {
  std::vector<std::vector<LinkIdx>> out;
  std::vector<char> visited(net.node_count(), 0);
  std::vector<LinkIdx> cur;
  visited[origin] = 1;
  enumerate_paths_rec(net, origin, dest, cur, visited, max_links, out);
  return out;
}

}  // namespace savsim::test
