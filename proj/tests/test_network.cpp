#include <doctest.h>

#include <algorithm>
#include <deque>

#include "helpers.hpp"

using namespace savsim;
using namespace savsim::test;

TEST_CASE("build: single link network") {
  std::vector<Node> nodes{{1, 0, 0}, {2, 600, 0}};
  std::vector<Link> links{basic_link(1, 1, 2, 600, 60)};
  std::vector<Zone> zones{basic_zone(1, 1)};
  Network net = Network::build(nodes, links, zones);
  CHECK(net.link_count() == 1);
  CHECK(net.free_flow_time_s(0) == doctest::Approx(36.0));
  CHECK(net.capacity_vps(0) == doctest::Approx(0.5));
}

TEST_CASE("build: dangling from-node is an error") {
  std::vector<Node> nodes{{1, 0, 0}, {2, 600, 0}};
  std::vector<Link> links{basic_link(1, 99, 2, 600, 60)};
  std::vector<Zone> zones{basic_zone(1, 1)};
  CHECK_THROWS_AS(Network::build(nodes, links, zones), ValidationError);
}

TEST_CASE("build: rejects non-positive attributes and bad wave geometry") {
  std::vector<Node> nodes{{1, 0, 0}, {2, 600, 0}};
  std::vector<Zone> zones{basic_zone(1, 1)};
  auto bad_len = basic_link(1, 1, 2, 0, 60);
  CHECK_THROWS_AS(Network::build(nodes, {bad_len}, zones), ValidationError);
  auto bad_jam = basic_link(1, 1, 2, 600, 60);
  bad_jam.jam_vpkmpl = 10;  // below critical density 1800/60 = 30
  CHECK_THROWS_AS(Network::build(nodes, {bad_jam}, zones), ValidationError);
  auto bad_green = basic_link(1, 1, 2, 600, 60);
  bad_green.green_ratio = 0.0;
  CHECK_THROWS_AS(Network::build(nodes, {bad_green}, zones), ValidationError);
}

TEST_CASE("build: asymmetric neighbor relation is an error") {
  std::vector<Node> nodes{{1, 0, 0}, {2, 600, 0}};
  std::vector<Link> links{basic_link(1, 1, 2, 600, 60), basic_link(2, 2, 1, 600, 60, 1800, 2)};
  std::vector<Zone> zones{basic_zone(1, 1, {2}), basic_zone(2, 2)};
  CHECK_THROWS_AS(Network::build(nodes, links, zones), ValidationError);
}

TEST_CASE("build: 3x3 grid stations mutually reachable (BFS oracle)") {
  const GridFixture fx = make_grid({.n = 3});
  CHECK(fx.nodes.size() == 9);
  CHECK(fx.links.size() == 24);
  CHECK(fx.zones.size() == 9);
  Network net = Network::build(fx.nodes, fx.links, fx.zones);
  CHECK(net.unreachable_stations().empty());

  // Independent BFS over an adjacency rebuilt from the raw link list.
  for (const Zone& zs : fx.zones) {
    std::deque<ExtId> q{zs.station_node};
    std::vector<ExtId> seen{zs.station_node};
    while (!q.empty()) {
      ExtId u = q.front();
      q.pop_front();
      for (const Link& l : fx.links) {
        if (l.from == u && std::find(seen.begin(), seen.end(), l.to) == seen.end()) {
          seen.push_back(l.to);
          q.push_back(l.to);
        }
      }
    }
    for (const Zone& zt : fx.zones)
      CHECK(std::find(seen.begin(), seen.end(), zt.station_node) != seen.end());
  }
}

TEST_CASE("shortest_path: forced minimum over parallel links") {
  Network net = parallel_paths_net();
  TravelTimeTable table = TravelTimeTable::free_flow(net);
  auto r = shortest_path(net, table, net.node_index(1), net.node_index(2));
  REQUIRE(r.has_value());
  REQUIRE(r->links.size() == 1);
  CHECK(net.link(r->links[0]).id == 1);
  CHECK(r->cost == doctest::Approx(100.0));
}

TEST_CASE("shortest_path: origin equals destination") {
  Network net = parallel_paths_net();
  TravelTimeTable table = TravelTimeTable::free_flow(net);
  auto r = shortest_path(net, table, net.node_index(1), net.node_index(1));
  REQUIRE(r.has_value());
  CHECK(r->links.empty());
  CHECK(r->cost == 0.0);
}

TEST_CASE("shortest_path: unreachable destination returns no route") {
  // Only a link 1 -> 2; nothing back.
  std::vector<Node> nodes{{1, 0, 0}, {2, 600, 0}};
  std::vector<Link> links{basic_link(1, 1, 2, 600, 60)};
  std::vector<Zone> zones{basic_zone(1, 1)};
  Network net = Network::build(nodes, links, zones);
  TravelTimeTable table = TravelTimeTable::free_flow(net);
  CHECK(!shortest_path(net, table, net.node_index(2), net.node_index(1)).has_value());
}

TEST_CASE("shortest_path: detour around a congested entry matches enumeration oracle") {
  Network net = grid_net(3);
  TravelTimeTable table = TravelTimeTable::free_flow(net);
  const NodeIdx o = net.node_index(1);
  const NodeIdx d = net.node_index(9);

  // Congest one link on the nominal route and re-check against the oracle.
  auto base = shortest_path(net, table, o, d);
  REQUIRE(base.has_value());
  table.seconds[base->links[0]] = 10000.0;

  auto detour = shortest_path(net, table, o, d);
  REQUIRE(detour.has_value());
  CHECK(detour->links[0] != base->links[0]);

  const auto all = enumerate_paths(net, o, d, 8);
  REQUIRE(!all.empty());
  double best = 1e18;
  for (const auto& p : all) best = std::min(best, route_cost(net, table, p, 0.0));
  CHECK(detour->cost == doctest::Approx(best));
}

TEST_CASE("route cost equals exact sum of table entries plus weighted tolls") {
  Network net = grid_net(3);
  TravelTimeTable table = TravelTimeTable::free_flow(net);
  for (int i = 0; i < net.link_count(); ++i) table.seconds[i] += (i % 5) * 7.25;
  auto r = shortest_path(net, table, net.node_index(1), net.node_index(9), 0.5);
  REQUIRE(r.has_value());
  double sum = 0.0;
  for (LinkIdx l : r->links) sum += table.seconds[l] + 0.5 * net.link(l).toll;
  CHECK(r->cost == sum);  // exact, by construction
}

TEST_CASE("k_shortest_routes: k=1 equals shortest_path") {
  Network net = grid_net(3);
  TravelTimeTable table = TravelTimeTable::free_flow(net);
  auto ks = k_shortest_routes(net, table, net.node_index(1), net.node_index(6), 1);
  auto sp = shortest_path(net, table, net.node_index(1), net.node_index(6));
  REQUIRE(ks.size() == 1);
  REQUIRE(sp.has_value());
  CHECK(ks[0].links == sp->links);
  CHECK(ks[0].cost == sp->cost);
}

TEST_CASE("k_shortest_routes: diamond exhausts its two simple paths") {
  Network net = diamond_net();
  TravelTimeTable table = TravelTimeTable::free_flow(net);
  auto ks = k_shortest_routes(net, table, net.node_index(1), net.node_index(4), 3);
  CHECK(ks.size() == 2);
  CHECK(ks[0].cost <= ks[1].cost);
}

TEST_CASE("k_shortest_routes: grid matches enumeration, loopless, nondecreasing") {
  Network net = grid_net(3);
  TravelTimeTable table = TravelTimeTable::free_flow(net);
  for (int i = 0; i < net.link_count(); ++i) table.seconds[i] += (i * 37 % 11) * 3.0;
  const NodeIdx o = net.node_index(1);
  const NodeIdx d = net.node_index(9);
  auto ks = k_shortest_routes(net, table, o, d, 3);
  REQUIRE(ks.size() == 3);

  for (std::size_t i = 1; i < ks.size(); ++i) CHECK(ks[i - 1].cost <= ks[i].cost);
  for (const Route& r : ks) {
    std::vector<NodeIdx> nodes{o};
    for (LinkIdx l : r.links) nodes.push_back(net.link_to_idx(l));
    std::sort(nodes.begin(), nodes.end());
    CHECK(std::adjacent_find(nodes.begin(), nodes.end()) == nodes.end());
  }

  // Oracle: sort every simple path by cost; the k best costs must agree.
  auto all = enumerate_paths(net, o, d, 12);
  std::vector<double> costs;
  for (const auto& p : all) costs.push_back(route_cost(net, table, p, 0.0));
  std::sort(costs.begin(), costs.end());
  for (std::size_t i = 0; i < ks.size(); ++i) CHECK(ks[i].cost == doctest::Approx(costs[i]));
}

TEST_CASE("k_shortest_routes: prefix stability in k") {
  Network net = grid_net(3);
  TravelTimeTable table = TravelTimeTable::free_flow(net);
  const NodeIdx o = net.node_index(2);
  const NodeIdx d = net.node_index(8);
  auto k2 = k_shortest_routes(net, table, o, d, 2);
  auto k5 = k_shortest_routes(net, table, o, d, 5);
  REQUIRE(k2.size() <= k5.size());
  for (std::size_t i = 0; i < k2.size(); ++i) CHECK(k2[i].cost == k5[i].cost);
}

TEST_CASE("shortest_path with uniform table equals hop-count metric on the grid") {
  Network net = grid_net(3);
  TravelTimeTable table;
  table.seconds.assign(net.link_count(), 100.0);
  for (ExtId a = 1; a <= 9; ++a) {
    for (ExtId b = 1; b <= 9; ++b) {
      auto r = shortest_path(net, table, net.node_index(a), net.node_index(b));
      REQUIRE(r.has_value());
      const int ra = static_cast<int>((a - 1) / 3), ca = static_cast<int>((a - 1) % 3);
      const int rb = static_cast<int>((b - 1) / 3), cb = static_cast<int>((b - 1) % 3);
      const int hops = std::abs(ra - rb) + std::abs(ca - cb);
      CHECK(r->links.size() == static_cast<std::size_t>(hops));
    }
  }
}

TEST_CASE("travel time table: initialized to free flow") {
  Network net = grid_net(3);
  TravelTimeTable table = TravelTimeTable::free_flow(net);
  for (int i = 0; i < net.link_count(); ++i)
    CHECK(table.seconds[i] == net.free_flow_time_s(i));
}
