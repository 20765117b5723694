#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "savsim/demand.hpp"
#include "savsim/flow.hpp"
#include "savsim/network.hpp"
#include "savsim/parking.hpp"

namespace savsim {

namespace fs = std::filesystem;

// nodes.csv: id,x,y
std::vector<Node> read_nodes_csv(const fs::path& path);
// links.csv: id,from,to,length_m,lanes,ffs_kmh,cap_vphpl,jam_vpkmpl,green_ratio,toll,zone_id
std::vector<Link> read_links_csv(const fs::path& path);
// zones.json: array of {id, land_use_m2{...}, households, station_node, neighbors}
std::vector<Zone> read_zones_json(const fs::path& path);
// od.csv: hour,origin_zone,dest_zone,trips (zone ids resolved via net)
std::vector<OdRow> read_od_csv(const fs::path& path, const Network& net);
// daily od.csv: origin_zone,dest_zone,trips
std::vector<OdRow> read_daily_od_csv(const fs::path& path, const Network& net);
// time_coefficients.csv: hour,coefficient (24 rows)
std::vector<double> read_time_coefficients_csv(const fs::path& path);
// rates.json: {"office": 0.005, ...}; missing keys keep the defaults
GenerationRateTable read_rates_json(const fs::path& path);
// arrivals.csv: zone_id,arrivals
std::vector<std::pair<ExtId, double>> read_arrivals_csv(const fs::path& path);

void write_nodes_csv(const fs::path& path, std::span<const Node> nodes);
void write_links_csv(const fs::path& path, std::span<const Link> links);
void write_zones_json(const fs::path& path, std::span<const Zone> zones);
void write_od_csv(const fs::path& path, const OdMatrix& od, const Network& net);

// Event log, CSV or length-prefixed binary records.
void write_events_csv(std::ostream& os, std::span<const TraversalEvent> events);
void write_events_binary(std::ostream& os, std::span<const TraversalEvent> events);
std::vector<TraversalEvent> read_events_csv(std::istream& is);
std::vector<TraversalEvent> read_events_binary(std::istream& is);

// Flat key = value config text; '#' starts a comment.
std::map<std::string, std::string> read_kv_file(const fs::path& path);

std::string read_file(const fs::path& path);
void write_file(const fs::path& path, std::string_view content);

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ull);
std::uint64_t hash_files(const std::vector<fs::path>& paths);
std::string hex64(std::uint64_t v);

// Locale-independent fixed formatting used by every report writer.
std::string fmt_fixed(double v, int precision);

}  // namespace savsim
