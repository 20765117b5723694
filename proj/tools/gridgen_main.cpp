// Writes the synthetic grid fixture as input files for the savsim CLI.
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "savsim/fixtures.hpp"
#include "savsim/io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"generate a grid fixture (nodes/links/zones/od)"};
  int n = 5;
  double peak_vph = 2500.0;
  double warmup_vph = 300.0;
  double cap = 600.0;
  std::string network_dir, od_path;
  app.add_option("--n", n, "grid size (n x n zones)");
  app.add_option("--peak-vph", peak_vph, "network-wide trips per peak hour (hours 7-8)");
  app.add_option("--warmup-vph", warmup_vph, "trips per warm-up hour (hours 4-6)");
  app.add_option("--cap", cap, "link capacity, veh/h/lane");
  app.add_option("--network-dir", network_dir, "output directory for network files")->required();
  app.add_option("--od", od_path, "output od.csv path")->required();
  CLI11_PARSE(app, argc, argv);

  try {
    savsim::GridOptions opt;
    opt.n = n;
    opt.peak_total_vph = peak_vph;
    opt.warmup_total_vph = warmup_vph;
    opt.cap_vphpl = cap;
    const auto fx = savsim::make_grid(opt);
    savsim::write_fixture(fx, network_dir, od_path);
    std::cout << "wrote " << fx.nodes.size() << " nodes, " << fx.links.size() << " links, "
              << fx.zones.size() << " zones to " << network_dir << " and " << od_path << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
