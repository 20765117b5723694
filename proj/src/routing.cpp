#include "savsim/routing.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <set>

namespace savsim {

double link_cost(const Network& net, const TravelTimeTable& table, LinkIdx l,
                 double vot_weight) {
  return table.seconds[l] + vot_weight * net.link(l).toll;
}

double route_cost(const Network& net, const TravelTimeTable& table,
                  const std::vector<LinkIdx>& links, double vot_weight) {
  double c = 0.0;
  for (LinkIdx l : links) c += link_cost(net, table, l, vot_weight);
  return c;
}

namespace {

struct Labels {
  std::vector<double> dist;
  std::vector<NodeIdx> parent_node;
  std::vector<LinkIdx> parent_link;
};

// Link-id sequence of the current label path, origin -> node.
std::vector<ExtId> label_path_ids(const Network& net, const Labels& lb, NodeIdx node) {
  std::vector<ExtId> ids;
  while (lb.parent_link[node] != kInvalidIdx) {
    ids.push_back(net.link(lb.parent_link[node]).id);
    node = lb.parent_node[node];
  }
  std::reverse(ids.begin(), ids.end());
  return ids;
}

// Dijkstra restricted to allowed links/nodes (for Yen spur paths). Ties in
// cost resolve to the lexicographically smallest link-id sequence, which
// keeps every result deterministic.
Labels dijkstra(const Network& net, const TravelTimeTable& table, NodeIdx origin,
                double vot_weight, const std::vector<char>* link_banned = nullptr,
                const std::vector<char>* node_banned = nullptr) {
  const int nn = net.node_count();
  Labels lb;
  lb.dist.assign(nn, std::numeric_limits<double>::infinity());
  lb.parent_node.assign(nn, kInvalidIdx);
  lb.parent_link.assign(nn, kInvalidIdx);
  lb.dist[origin] = 0.0;

  using QE = std::pair<double, NodeIdx>;
  std::priority_queue<QE, std::vector<QE>, std::greater<>> pq;
  pq.push({0.0, origin});

  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > lb.dist[u]) continue;
    for (LinkIdx l : net.out_links(u)) {
      if (link_banned && (*link_banned)[l]) continue;
      const NodeIdx v = net.link_to_idx(l);
      if (node_banned && (*node_banned)[v]) continue;
      const double nd = d + link_cost(net, table, l, vot_weight);
      if (nd < lb.dist[v]) {
        lb.dist[v] = nd;
        lb.parent_node[v] = u;
        lb.parent_link[v] = l;
        pq.push({nd, v});
      } else if (nd == lb.dist[v]) {
        std::vector<ExtId> cand = label_path_ids(net, lb, u);
        cand.push_back(net.link(l).id);
        if (cand < label_path_ids(net, lb, v)) {
          lb.parent_node[v] = u;
          lb.parent_link[v] = l;
          pq.push({nd, v});  // re-relax successors with the new lex choice
        }
      }
    }
  }
  return lb;
}

std::optional<Route> extract_route(const Network& net, const TravelTimeTable& table,
                                   const Labels& lb, NodeIdx origin, NodeIdx dest,
                                   double vot_weight) {
  if (origin == dest) return Route{};
  if (lb.parent_link[dest] == kInvalidIdx) return std::nullopt;
  Route r;
  for (NodeIdx n = dest; n != origin; n = lb.parent_node[n]) r.links.push_back(lb.parent_link[n]);
  std::reverse(r.links.begin(), r.links.end());
  r.cost = route_cost(net, table, r.links, vot_weight);
  return r;
}

std::vector<ExtId> link_ids(const Network& net, const std::vector<LinkIdx>& links) {
  std::vector<ExtId> ids;
  ids.reserve(links.size());
  for (LinkIdx l : links) ids.push_back(net.link(l).id);
  return ids;
}

}  // namespace

std::optional<Route> shortest_path(const Network& net, const TravelTimeTable& table,
                                   NodeIdx origin, NodeIdx dest, double vot_weight) {
  if (origin == dest) return Route{};
  Labels lb = dijkstra(net, table, origin, vot_weight);
  return extract_route(net, table, lb, origin, dest, vot_weight);
}

std::vector<Route> k_shortest_routes(const Network& net, const TravelTimeTable& table,
                                     NodeIdx origin, NodeIdx dest, int k,
                                     double vot_weight) {
  if (k < 1) throw ValidationError("k_shortest_routes: k must be >= 1");
  std::vector<Route> result;
  auto first = shortest_path(net, table, origin, dest, vot_weight);
  if (!first) return result;
  result.push_back(std::move(*first));
  if (origin == dest) return result;

  // Yen's algorithm. Candidates ordered by (cost, link-id sequence).
  auto cand_less = [&net](const Route& a, const Route& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    return link_ids(net, a.links) < link_ids(net, b.links);
  };
  std::vector<Route> candidates;

  std::vector<char> link_banned(net.link_count(), 0);
  std::vector<char> node_banned(net.node_count(), 0);

  while (static_cast<int>(result.size()) < k) {
    const Route& prev = result.back();
    // Spur from every node of the previous path.
    NodeIdx spur_node = origin;
    std::vector<LinkIdx> root;
    for (std::size_t i = 0; i <= prev.links.size(); ++i) {
      std::fill(link_banned.begin(), link_banned.end(), 0);
      std::fill(node_banned.begin(), node_banned.end(), 0);
      // Ban links that would repeat an already-found path with this root.
      for (const Route& r : result) {
        if (r.links.size() >= root.size() &&
            std::equal(root.begin(), root.end(), r.links.begin())) {
          if (r.links.size() > root.size()) link_banned[r.links[root.size()]] = 1;
        }
      }
      // Ban root nodes (loopless requirement), spur node excluded.
      NodeIdx n = origin;
      for (LinkIdx l : root) {
        node_banned[n] = 1;
        n = net.link_to_idx(l);
      }

      Labels lb = dijkstra(net, table, spur_node, vot_weight, &link_banned, &node_banned);
      if (auto spur = extract_route(net, table, lb, spur_node, dest, vot_weight)) {
        Route total;
        total.links = root;
        total.links.insert(total.links.end(), spur->links.begin(), spur->links.end());
        total.cost = route_cost(net, table, total.links, vot_weight);
        bool dup = false;
        for (const Route& r : result)
          if (r.links == total.links) dup = true;
        for (const Route& r : candidates)
          if (r.links == total.links) dup = true;
        if (!dup) candidates.push_back(std::move(total));
      }

      if (i < prev.links.size()) {
        root.push_back(prev.links[i]);
        spur_node = net.link_to_idx(prev.links[i]);
      }
    }
    if (candidates.empty()) break;
    auto best = std::min_element(candidates.begin(), candidates.end(), cand_less);
    result.push_back(std::move(*best));
    candidates.erase(best);
  }
  return result;
}

}  // namespace savsim
