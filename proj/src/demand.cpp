#include "savsim/demand.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

namespace savsim {

OdMatrix::OdMatrix(int zone_count, std::vector<OdRow> rows) {
  zones_ = zone_count;
  index_rows(std::move(rows));
}

void OdMatrix::index_rows(std::vector<OdRow> rows) {
  std::map<std::pair<ZoneIdx, ZoneIdx>, std::array<double, kHoursPerDay>> acc;
  for (const OdRow& r : rows) {
    if (r.hour < 0 || r.hour >= kHoursPerDay)
      throw ValidationError("od: hour out of range: " + std::to_string(r.hour));
    if (r.origin < 0 || r.origin >= zones_ || r.dest < 0 || r.dest >= zones_)
      throw ValidationError("od: zone index out of range");
    if (r.trips < 0) throw ValidationError("od: negative trips");
    auto [it, fresh] = acc.try_emplace({r.origin, r.dest});
    if (fresh) it->second.fill(0.0);
    it->second[r.hour] += r.trips;
  }
  pairs_.reserve(acc.size());
  rates_.reserve(acc.size() * kHoursPerDay);
  gen_.assign(static_cast<std::size_t>(kHoursPerDay) * zones_, 0.0);
  arr_.assign(static_cast<std::size_t>(kHoursPerDay) * zones_, 0.0);
  for (const auto& [key, hourly] : acc) {
    pairs_.push_back({key.first, key.second});
    for (int h = 0; h < kHoursPerDay; ++h) {
      rates_.push_back(hourly[h]);
      gen_[static_cast<std::size_t>(h) * zones_ + key.first] += hourly[h];
      arr_[static_cast<std::size_t>(h) * zones_ + key.second] += hourly[h];
    }
  }
}

OdMatrix OdMatrix::expand_daily_to_hourly(int zone_count, const std::vector<OdRow>& daily,
                                          const std::vector<double>& coefficients) {
  if (static_cast<int>(coefficients.size()) != kHoursPerDay)
    throw ValidationError("time coefficients: expected 24 values");
  double sum = 0.0;
  for (double c : coefficients) {
    if (c < 0) throw ValidationError("time coefficients: negative value");
    sum += c;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw ValidationError("time coefficients: sum " + std::to_string(sum) + " != 1");

  std::vector<OdRow> rows;
  rows.reserve(daily.size() * kHoursPerDay);
  for (const OdRow& d : daily) {
    for (int h = 0; h < kHoursPerDay; ++h) {
      if (coefficients[h] == 0.0) continue;
      rows.push_back({h, d.origin, d.dest, d.trips * coefficients[h]});
    }
  }
  return OdMatrix(zone_count, std::move(rows));
}

double OdMatrix::rate(int hour, ZoneIdx origin, ZoneIdx dest) const {
  auto it = std::lower_bound(pairs_.begin(), pairs_.end(), Pair{origin, dest},
                             [](const Pair& a, const Pair& b) {
                               return std::tie(a.origin, a.dest) < std::tie(b.origin, b.dest);
                             });
  if (it == pairs_.end() || it->origin != origin || it->dest != dest) return 0.0;
  return pair_rate(static_cast<int>(it - pairs_.begin()), hour);
}

double OdMatrix::expected_generation(ZoneIdx zone, double t0_s, double t1_s) const {
  if (t1_s < t0_s) throw ValidationError("expected_generation: window end before start");
  double total = 0.0;
  double t = t0_s;
  while (t < t1_s) {
    const int hour = static_cast<int>(std::floor(t / 3600.0));
    const double hour_end = (hour + 1) * 3600.0;
    const double seg_end = std::min(t1_s, hour_end);
    if (hour >= 0 && hour < kHoursPerDay)
      total += generation(hour, zone) * (seg_end - t) / 3600.0;
    t = seg_end;
  }
  return total;
}

double OdMatrix::expected_arrivals(ZoneIdx zone, double t0_s, double t1_s) const {
  if (t1_s < t0_s) throw ValidationError("expected_arrivals: window end before start");
  double total = 0.0;
  double t = t0_s;
  while (t < t1_s) {
    const int hour = static_cast<int>(std::floor(t / 3600.0));
    const double seg_end = std::min(t1_s, (hour + 1) * 3600.0);
    if (hour >= 0 && hour < kHoursPerDay)
      total += arr_[static_cast<std::size_t>(hour) * zones_ + zone] * (seg_end - t) / 3600.0;
    t = seg_end;
  }
  return total;
}

double OdMatrix::expected_generation_total(double t0_s, double t1_s) const {
  double total = 0.0;
  for (ZoneIdx z = 0; z < zones_; ++z) total += expected_generation(z, t0_s, t1_s);
  return total;
}

double OdMatrix::total_trips(int h0, int h1) const {
  double total = 0.0;
  for (int h = std::max(0, h0); h < std::min(kHoursPerDay, h1); ++h)
    for (ZoneIdx z = 0; z < zones_; ++z) total += generation(h, z);
  return total;
}

double OdMatrix::arrivals_into(ZoneIdx zone, int h0, int h1) const {
  double total = 0.0;
  for (int h = std::max(0, h0); h < std::min(kHoursPerDay, h1); ++h)
    total += arr_[static_cast<std::size_t>(h) * zones_ + zone];
  return total;
}

RequestStream::RequestStream(const OdMatrix& od, double bin_s) : od_(od), bin_s_(bin_s) {
  if (!(bin_s_ > 0) || std::abs(3600.0 / bin_s_ - std::round(3600.0 / bin_s_)) > 1e-9)
    throw ValidationError("request stream: bin must divide one hour");
  bins_per_hour_ = static_cast<int>(std::round(3600.0 / bin_s_));
  residual_.assign(od_.pair_count(), 0.0);
}

std::vector<TripRequest> RequestStream::emit(double t_s) {
  const int hour = static_cast<int>(std::floor(t_s / 3600.0));
  std::vector<TripRequest> out;
  if (hour < 0 || hour >= kHoursPerDay) return out;
  const auto& pairs = od_.pairs();
  for (int p = 0; p < od_.pair_count(); ++p) {
    // Accumulate in units of vehicles/hour so that integer hourly rates stay
    // exact: emitting floor(acc / bins_per_hour) keeps everything integral.
    double& acc = residual_[p];
    acc += od_.pair_rate(p, hour);
    const auto n = static_cast<std::int64_t>((acc + 1e-9) / bins_per_hour_);
    if (n > 0) {
      acc -= static_cast<double>(n) * bins_per_hour_;
      for (std::int64_t k = 0; k < n; ++k) {
        TripRequest r;
        r.id = next_id_++;
        r.origin = pairs[p].origin;
        r.dest = pairs[p].dest;
        r.generation_s = t_s;
        out.push_back(r);
      }
    }
  }
  return out;
}

}  // namespace savsim
