#include "savsim/io.hpp"

#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace savsim {

namespace {

using nlohmann::json;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double to_double(const std::string& s, const std::string& where) {
  double v{};
  const char* b = s.data();
  const char* e = b + s.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc{} || p != e) throw IoError(where + ": bad number '" + s + "'");
  return v;
}

std::int64_t to_int(const std::string& s, const std::string& where) {
  std::int64_t v{};
  const char* b = s.data();
  const char* e = b + s.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc{} || p != e) throw IoError(where + ": bad integer '" + s + "'");
  return v;
}

struct CsvReader {
  std::ifstream in;
  std::string path;
  std::vector<std::string> header;
  int line_no{0};

  CsvReader(const fs::path& p, const std::string& expected_header) : path(p.string()) {
    in.open(p);
    if (!in) throw IoError("cannot open " + path);
    std::string first;
    if (!std::getline(in, first)) throw IoError(path + ": empty file");
    ++line_no;
    if (!first.empty() && first.back() == '\r') first.pop_back();
    if (first != expected_header)
      throw IoError(path + ": expected header '" + expected_header + "', got '" + first + "'");
  }

  bool next(std::vector<std::string>& fields, std::size_t expected) {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#') continue;
      fields = split_csv_line(line);
      if (fields.size() != expected)
        throw IoError(path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(expected) + " fields");
      return true;
    }
    return false;
  }

  std::string where() const { return path + ":" + std::to_string(line_no); }
};

}  // namespace

std::vector<Node> read_nodes_csv(const fs::path& path) {
  CsvReader r(path, "id,x,y");
  std::vector<Node> out;
  std::vector<std::string> f;
  while (r.next(f, 3))
    out.push_back({to_int(f[0], r.where()), to_double(f[1], r.where()), to_double(f[2], r.where())});
  return out;
}

std::vector<Link> read_links_csv(const fs::path& path) {
  CsvReader r(path, "id,from,to,length_m,lanes,ffs_kmh,cap_vphpl,jam_vpkmpl,green_ratio,toll,zone_id");
  std::vector<Link> out;
  std::vector<std::string> f;
  while (r.next(f, 11)) {
    Link l;
    l.id = to_int(f[0], r.where());
    l.from = to_int(f[1], r.where());
    l.to = to_int(f[2], r.where());
    l.length_m = to_double(f[3], r.where());
    l.lanes = static_cast<int>(to_int(f[4], r.where()));
    l.ffs_kmh = to_double(f[5], r.where());
    l.cap_vphpl = to_double(f[6], r.where());
    l.jam_vpkmpl = to_double(f[7], r.where());
    l.green_ratio = to_double(f[8], r.where());
    l.toll = to_double(f[9], r.where());
    l.zone_id = to_int(f[10], r.where());
    out.push_back(l);
  }
  return out;
}

std::vector<Zone> read_zones_json(const fs::path& path) {
  json doc;
  try {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    in >> doc;
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  if (!doc.is_array()) throw IoError(path.string() + ": expected a JSON array of zones");
  std::vector<Zone> out;
  for (const json& jz : doc) {
    Zone z;
    z.id = jz.at("id").get<std::int64_t>();
    z.households = jz.at("households").get<std::int64_t>();
    z.station_node = jz.at("station_node").get<std::int64_t>();
    const json& lu = jz.at("land_use_m2");
    for (auto it = lu.begin(); it != lu.end(); ++it)
      z.land_use_m2[static_cast<int>(land_use_from_name(it.key()))] = it.value().get<double>();
    for (const json& nb : jz.at("neighbors")) z.neighbors.push_back(nb.get<std::int64_t>());
    out.push_back(std::move(z));
  }
  return out;
}

std::vector<OdRow> read_od_csv(const fs::path& path, const Network& net) {
  CsvReader r(path, "hour,origin_zone,dest_zone,trips");
  std::vector<OdRow> out;
  std::vector<std::string> f;
  while (r.next(f, 4)) {
    OdRow row;
    row.hour = static_cast<int>(to_int(f[0], r.where()));
    row.origin = net.zone_index(to_int(f[1], r.where()));
    row.dest = net.zone_index(to_int(f[2], r.where()));
    row.trips = to_double(f[3], r.where());
    out.push_back(row);
  }
  return out;
}

std::vector<OdRow> read_daily_od_csv(const fs::path& path, const Network& net) {
  CsvReader r(path, "origin_zone,dest_zone,trips");
  std::vector<OdRow> out;
  std::vector<std::string> f;
  while (r.next(f, 3)) {
    OdRow row;
    row.hour = 0;
    row.origin = net.zone_index(to_int(f[0], r.where()));
    row.dest = net.zone_index(to_int(f[1], r.where()));
    row.trips = to_double(f[2], r.where());
    out.push_back(row);
  }
  return out;
}

std::vector<double> read_time_coefficients_csv(const fs::path& path) {
  CsvReader r(path, "hour,coefficient");
  std::vector<double> coef(kHoursPerDay, 0.0);
  std::vector<char> seen(kHoursPerDay, 0);
  std::vector<std::string> f;
  int rows = 0;
  while (r.next(f, 2)) {
    const int h = static_cast<int>(to_int(f[0], r.where()));
    if (h < 0 || h >= kHoursPerDay) throw IoError(r.where() + ": hour out of range");
    if (seen[h]) throw IoError(r.where() + ": duplicate hour");
    seen[h] = 1;
    coef[h] = to_double(f[1], r.where());
    ++rows;
  }
  if (rows != kHoursPerDay) throw IoError(path.string() + ": expected 24 rows");
  return coef;
}

GenerationRateTable read_rates_json(const fs::path& path) {
  json doc;
  try {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    in >> doc;
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  GenerationRateTable t = GenerationRateTable::defaults();
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const double v = it.value().get<double>();
    if (v < 0) throw IoError(path.string() + ": negative rate for " + it.key());
    t.per_m2[static_cast<int>(land_use_from_name(it.key()))] = v;
  }
  return t;
}

std::vector<std::pair<ExtId, double>> read_arrivals_csv(const fs::path& path) {
  CsvReader r(path, "zone_id,arrivals");
  std::vector<std::pair<ExtId, double>> out;
  std::vector<std::string> f;
  while (r.next(f, 2)) out.emplace_back(to_int(f[0], r.where()), to_double(f[1], r.where()));
  return out;
}

void write_nodes_csv(const fs::path& path, std::span<const Node> nodes) {
  std::ostringstream os;
  os << "id,x,y\n";
  for (const Node& n : nodes)
    os << n.id << ',' << fmt_fixed(n.x, 3) << ',' << fmt_fixed(n.y, 3) << '\n';
  write_file(path, os.str());
}

void write_links_csv(const fs::path& path, std::span<const Link> links) {
  std::ostringstream os;
  os << "id,from,to,length_m,lanes,ffs_kmh,cap_vphpl,jam_vpkmpl,green_ratio,toll,zone_id\n";
  for (const Link& l : links) {
    os << l.id << ',' << l.from << ',' << l.to << ',' << fmt_fixed(l.length_m, 3) << ','
       << l.lanes << ',' << fmt_fixed(l.ffs_kmh, 3) << ',' << fmt_fixed(l.cap_vphpl, 3) << ','
       << fmt_fixed(l.jam_vpkmpl, 3) << ',' << fmt_fixed(l.green_ratio, 4) << ','
       << fmt_fixed(l.toll, 3) << ',' << l.zone_id << '\n';
  }
  write_file(path, os.str());
}

void write_zones_json(const fs::path& path, std::span<const Zone> zones) {
  json arr = json::array();
  for (const Zone& z : zones) {
    json jz;
    jz["id"] = z.id;
    jz["households"] = z.households;
    jz["station_node"] = z.station_node;
    json lu;
    for (int u = 0; u < kLandUseCount; ++u)
      lu[std::string(kLandUseNames[u])] = z.land_use_m2[u];
    jz["land_use_m2"] = std::move(lu);
    jz["neighbors"] = z.neighbors;
    arr.push_back(std::move(jz));
  }
  write_file(path, arr.dump(2) + "\n");
}

void write_od_csv(const fs::path& path, const OdMatrix& od, const Network& net) {
  std::ostringstream os;
  os << "hour,origin_zone,dest_zone,trips\n";
  for (int p = 0; p < od.pair_count(); ++p) {
    for (int h = 0; h < kHoursPerDay; ++h) {
      const double v = od.pair_rate(p, h);
      if (v == 0.0) continue;
      os << h << ',' << net.zone(od.pairs()[p].origin).id << ','
         << net.zone(od.pairs()[p].dest).id << ',' << fmt_fixed(v, 6) << '\n';
    }
  }
  write_file(path, os.str());
}

void write_events_csv(std::ostream& os, std::span<const TraversalEvent> events) {
  os << "time_s,vehicle_id,link_id,event,is_empty_run\n";
  for (const TraversalEvent& e : events) {
    os << fmt_fixed(e.time_s, 3) << ',' << e.vehicle << ',' << e.link << ','
       << (e.is_exit ? "exit" : "enter") << ',' << (e.is_empty_run ? 1 : 0) << '\n';
  }
}

namespace {
constexpr char kEventMagic[4] = {'S', 'E', 'V', '1'};

template <typename T>
void put(std::string& buf, T v) {
  char tmp[sizeof(T)];
  std::memcpy(tmp, &v, sizeof(T));
  buf.append(tmp, sizeof(T));
}

template <typename T>
T take(const char*& p, const char* end) {
  if (p + sizeof(T) > end) throw IoError("event binary: truncated record");
  T v;
  std::memcpy(&v, p, sizeof(T));
  p += sizeof(T);
  return v;
}
}  // namespace

void write_events_binary(std::ostream& os, std::span<const TraversalEvent> events) {
  os.write(kEventMagic, 4);
  for (const TraversalEvent& e : events) {
    std::string rec;
    put(rec, e.time_s);
    put(rec, e.vehicle);
    put(rec, e.link);
    put<std::uint8_t>(rec, e.is_exit ? 1 : 0);
    put<std::uint8_t>(rec, e.is_empty_run ? 1 : 0);
    const auto len = static_cast<std::uint32_t>(rec.size());
    os.write(reinterpret_cast<const char*>(&len), sizeof len);
    os.write(rec.data(), static_cast<std::streamsize>(rec.size()));
  }
}

std::vector<TraversalEvent> read_events_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw IoError("event csv: empty stream");
  std::vector<TraversalEvent> out;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 5) throw IoError("event csv line " + std::to_string(line_no));
    TraversalEvent e;
    e.time_s = to_double(f[0], "event csv");
    e.vehicle = static_cast<VehicleId>(to_int(f[1], "event csv"));
    e.link = to_int(f[2], "event csv");
    if (f[3] == "exit") e.is_exit = true;
    else if (f[3] == "enter") e.is_exit = false;
    else throw IoError("event csv: bad event '" + f[3] + "'");
    e.is_empty_run = to_int(f[4], "event csv") != 0;
    out.push_back(e);
  }
  return out;
}

std::vector<TraversalEvent> read_events_binary(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (is.gcount() != 4 || std::memcmp(magic, kEventMagic, 4) != 0)
    throw IoError("event binary: bad magic");
  std::vector<TraversalEvent> out;
  for (;;) {
    std::uint32_t len{};
    is.read(reinterpret_cast<char*>(&len), sizeof len);
    if (is.gcount() == 0) break;
    if (is.gcount() != sizeof len) throw IoError("event binary: truncated length");
    std::string rec(len, '\0');
    is.read(rec.data(), len);
    if (static_cast<std::uint32_t>(is.gcount()) != len)
      throw IoError("event binary: truncated record");
    const char* p = rec.data();
    const char* end = p + rec.size();
    TraversalEvent e;
    e.time_s = take<double>(p, end);
    e.vehicle = take<VehicleId>(p, end);
    e.link = take<ExtId>(p, end);
    e.is_exit = take<std::uint8_t>(p, end) != 0;
    e.is_empty_run = take<std::uint8_t>(p, end) != 0;
    out.push_back(e);
  }
  return out;
}

std::map<std::string, std::string> read_kv_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(path.string() + ": empty key");
    if (!kv.emplace(key, val).second)
      throw ConfigError(path.string() + ": duplicate key '" + key + "'");
  }
  return kv;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t hash_files(const std::vector<fs::path>& paths) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const fs::path& p : paths) {
    h = fnv1a(p.filename().string(), h);
    h = fnv1a(std::string_view("\0", 1), h);
    h = fnv1a(read_file(p), h);
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fmt_fixed(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

}  // namespace savsim
