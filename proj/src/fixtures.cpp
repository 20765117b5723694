#include "savsim/fixtures.hpp"

#include <cmath>

#include "savsim/io.hpp"

namespace savsim {

GridFixture make_grid(const GridOptions& opt) {
  const int n = opt.n;
  if (n < 2) throw ValidationError("grid fixture needs n >= 2");
  GridFixture fx;

  auto node_id = [n](int r, int c) { return static_cast<ExtId>(r * n + c + 1); };
  const double center = (n - 1) / 2.0;
  const double max_dist = 2.0 * center > 0 ? 2.0 * center : 1.0;

  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      fx.nodes.push_back({node_id(r, c), c * opt.spacing_m, r * opt.spacing_m});

  ExtId link_id = 1;
  auto add_link = [&](int r1, int c1, int r2, int c2) {
    Link l;
    l.id = link_id++;
    l.from = node_id(r1, c1);
    l.to = node_id(r2, c2);
    l.length_m = opt.spacing_m;
    l.lanes = opt.lanes;
    l.ffs_kmh = opt.ffs_kmh;
    l.cap_vphpl = opt.cap_vphpl;
    l.jam_vpkmpl = opt.jam_vpkmpl;
    l.zone_id = node_id(r1, c1);  // link belongs to its from-cell's zone
    fx.links.push_back(l);
  };
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if (c + 1 < n) {
        add_link(r, c, r, c + 1);
        add_link(r, c + 1, r, c);
      }
      if (r + 1 < n) {
        add_link(r, c, r + 1, c);
        add_link(r + 1, c, r, c);
      }
    }
  }

  // Land use: office/commerce mass in the core, residences at the periphery.
  std::vector<double> res_area(n * n);
  double res_total = 0.0;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const double dist = std::abs(r - center) + std::abs(c - center);
      const double center_f = 1.0 - dist / max_dist;
      const double periph_f = dist / max_dist;
      Zone z;
      z.id = node_id(r, c);
      z.station_node = z.id;
      z.land_use_m2[static_cast<int>(LandUse::office)] = 140000.0 * center_f * center_f;
      z.land_use_m2[static_cast<int>(LandUse::commerce)] = 90000.0 * center_f;
      z.land_use_m2[static_cast<int>(LandUse::residence)] = 60000.0 + 420000.0 * periph_f;
      z.land_use_m2[static_cast<int>(LandUse::industry)] =
          (r == 0 && c == 0) ? 50000.0 : 0.0;
      z.land_use_m2[static_cast<int>(LandUse::park)] = 30000.0;
      z.land_use_m2[static_cast<int>(LandUse::transport)] = 20000.0;
      z.land_use_m2[static_cast<int>(LandUse::nature)] =
          (r == n - 1 && c == n - 1) ? 80000.0 : 0.0;
      if (r > 0) z.neighbors.push_back(node_id(r - 1, c));
      if (r + 1 < n) z.neighbors.push_back(node_id(r + 1, c));
      if (c > 0) z.neighbors.push_back(node_id(r, c - 1));
      if (c + 1 < n) z.neighbors.push_back(node_id(r, c + 1));
      res_area[r * n + c] = z.land_use_m2[static_cast<int>(LandUse::residence)];
      res_total += res_area[r * n + c];
      fx.zones.push_back(std::move(z));
    }
  }
  // Households proportional to residential area; remainder to the last zone.
  std::int64_t assigned = 0;
  for (int i = 0; i < n * n; ++i) {
    auto h = static_cast<std::int64_t>(
        std::floor(static_cast<double>(opt.households_total) * res_area[i] / res_total));
    fx.zones[i].households = h;
    assigned += h;
  }
  fx.zones[n * n - 1].households += opt.households_total - assigned;

  // OD: commute from residence mass to office/commerce mass plus a uniform
  // background; intra-zone pairs excluded.
  const int zc = n * n;
  std::vector<double> prod(zc), attr(zc);
  double prod_sum = 0, attr_sum = 0;
  for (int i = 0; i < zc; ++i) {
    prod[i] = static_cast<double>(fx.zones[i].households);
    attr[i] = fx.zones[i].land_use_m2[static_cast<int>(LandUse::office)] +
              fx.zones[i].land_use_m2[static_cast<int>(LandUse::commerce)];
    prod_sum += prod[i];
    attr_sum += attr[i];
  }
  auto add_hour = [&](int hour, double total_vph) {
    // Normalize over the off-diagonal mass so the hour total is exact.
    double commute_mass = 0.0;
    for (int i = 0; i < zc; ++i)
      for (int j = 0; j < zc; ++j)
        if (i != j) commute_mass += prod[i] * attr[j];
    const double uniform_pairs = static_cast<double>(zc) * (zc - 1);
    for (int i = 0; i < zc; ++i) {
      for (int j = 0; j < zc; ++j) {
        if (i == j) continue;
        const double commute = prod[i] * attr[j] / commute_mass;
        const double uniform = 1.0 / uniform_pairs;
        const double trips =
            total_vph * ((1.0 - opt.background_fraction) * commute +
                         opt.background_fraction * uniform);
        if (trips > 0) fx.od.push_back({hour, i, j, trips});
      }
    }
  };
  for (int h = 4; h <= 6; ++h) add_hour(h, opt.warmup_total_vph);
  add_hour(7, opt.peak_total_vph);
  add_hour(8, opt.peak_total_vph);

  return fx;
}

void write_fixture(const GridFixture& fx, const std::filesystem::path& network_dir,
                   const std::filesystem::path& od_path) {
  write_nodes_csv(network_dir / "nodes.csv", fx.nodes);
  write_links_csv(network_dir / "links.csv", fx.links);
  write_zones_json(network_dir / "zones.json", fx.zones);

  Network net = Network::build(fx.nodes, fx.links, fx.zones);
  OdMatrix od(net.zone_count(), fx.od);
  write_od_csv(od_path, od, net);
}

}  // namespace savsim
