#pragma once

#include <filesystem>
#include <vector>

#include "savsim/demand.hpp"
#include "savsim/network.hpp"

namespace savsim {

// Synthetic n x n grid: one node/zone/station per cell, bidirectional links
// between orthogonal neighbors, office/commerce-heavy core and
// residence-heavy periphery, commute-shaped OD. Fully deterministic.
struct GridOptions {
  int n{5};
  double spacing_m{1000.0};
  double ffs_kmh{50.0};
  double cap_vphpl{600.0};
  double jam_vpkmpl{140.0};
  int lanes{1};
  double peak_total_vph{2500.0};    // hours 7 and 8
  double warmup_total_vph{300.0};   // hours 4..6
  double background_fraction{0.35};  // uniform share of the OD
  std::int64_t households_total{8000};
};

struct GridFixture {
  std::vector<Node> nodes;
  std::vector<Link> links;
  std::vector<Zone> zones;
  std::vector<OdRow> od;  // zone indices follow the zones vector order
};

GridFixture make_grid(const GridOptions& opt);

// Writes nodes.csv/links.csv/zones.json into network_dir and od.csv.
void write_fixture(const GridFixture& fx, const std::filesystem::path& network_dir,
                   const std::filesystem::path& od_path);

}  // namespace savsim
