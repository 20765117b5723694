#pragma once

#include <optional>
#include <vector>

#include "savsim/network.hpp"

namespace savsim {

struct Route {
  std::vector<LinkIdx> links;
  double cost{0.0};  // sum of table entries (+ weighted tolls) along links
};

// Generalized cost of one link under the given table.
double link_cost(const Network& net, const TravelTimeTable& table, LinkIdx l,
                 double vot_weight);

// Exact re-summation in link order; the cost reported on every Route.
double route_cost(const Network& net, const TravelTimeTable& table,
                  const std::vector<LinkIdx>& links, double vot_weight);

// Label-setting shortest path on the current table snapshot. Ties in cost are
// broken towards the lexicographically smallest link-id sequence. Returns
// nullopt when dest is unreachable; origin == dest yields an empty route.
std::optional<Route> shortest_path(const Network& net, const TravelTimeTable& table,
                                   NodeIdx origin, NodeIdx dest,
                                   double vot_weight = 0.0);

// Up to k loopless routes in nondecreasing generalized cost (Yen). The first
// entry equals shortest_path. Unreachable -> empty list.
std::vector<Route> k_shortest_routes(const Network& net, const TravelTimeTable& table,
                                     NodeIdx origin, NodeIdx dest, int k,
                                     double vot_weight = 0.0);

}  // namespace savsim
