#pragma once

#include <cstdint>
#include <vector>

#include "savsim/types.hpp"

namespace savsim {

inline constexpr int kHoursPerDay = 24;

enum class RequestState { unassigned, waitlisted, assigned, riding, completed };

struct TripRequest {
  std::int64_t id{};
  ZoneIdx origin{};
  ZoneIdx dest{};
  double generation_s{};
  RequestState state{RequestState::unassigned};
  double assignment_s{-1.0};
  double pickup_s{-1.0};
  double arrival_s{-1.0};
};

struct OdRow {
  int hour{};
  ZoneIdx origin{};
  ZoneIdx dest{};
  double trips{};
};

// Hourly OD trip rates (vehicles/hour) over a 24-hour day.
class OdMatrix {
 public:
  OdMatrix(int zone_count, std::vector<OdRow> rows);

  // trips[h][i][j] = daily[i][j] * coefficient[h]; coefficients must be
  // non-negative and sum to 1 within 1e-9.
  static OdMatrix expand_daily_to_hourly(int zone_count,
                                         const std::vector<OdRow>& daily,  // hour ignored
                                         const std::vector<double>& coefficients);

  int zone_count() const { return zones_; }
  int pair_count() const { return static_cast<int>(pairs_.size()); }
  double rate(int hour, ZoneIdx origin, ZoneIdx dest) const;

  // Vehicles/hour generated from `zone` during `hour`.
  double generation(int hour, ZoneIdx zone) const { return gen_[hour * zones_ + zone]; }
  // Expected trips generated from `zone` in [t0_s, t1_s) under uniform
  // within-hour spreading (Demand_Block when the window is one relocation
  // period; summed over zones it gives Demand_Total).
  double expected_generation(ZoneIdx zone, double t0_s, double t1_s) const;
  double expected_generation_total(double t0_s, double t1_s) const;
  // Expected trips arriving into `zone` in [t0_s, t1_s), same spreading rule.
  double expected_arrivals(ZoneIdx zone, double t0_s, double t1_s) const;

  // Total trips over whole hours [h0, h1).
  double total_trips(int h0 = 0, int h1 = kHoursPerDay) const;
  // Trips arriving into `zone` over whole hours [h0, h1).
  double arrivals_into(ZoneIdx zone, int h0, int h1) const;

  struct Pair {
    ZoneIdx origin, dest;
  };
  const std::vector<Pair>& pairs() const { return pairs_; }
  double pair_rate(int pair_index, int hour) const {
    return rates_[static_cast<std::size_t>(pair_index) * kHoursPerDay + hour];
  }

 private:
  OdMatrix() = default;
  void index_rows(std::vector<OdRow> rows);

  int zones_{0};
  std::vector<Pair> pairs_;          // sorted by (origin, dest)
  std::vector<double> rates_;        // [pair][hour]
  std::vector<double> gen_;          // [hour][zone]
  std::vector<double> arr_;          // [hour][zone]
};

// Turns hourly OD rates into integer trip requests per 30-s bin. Fractional
// demand is carried over to the next bin per OD pair, so cumulative emissions
// track cumulative demand within one vehicle, and exactly over whole hours.
class RequestStream {
 public:
  RequestStream(const OdMatrix& od, double bin_s = 30.0);

  // Requests for the bin starting at t (t on the bin cadence). Ordered by
  // (origin, dest), ids dense and increasing.
  std::vector<TripRequest> emit(double t_s);

  double bin_seconds() const { return bin_s_; }
  std::int64_t emitted_total() const { return next_id_; }

 private:
  const OdMatrix& od_;
  double bin_s_;
  int bins_per_hour_;
  std::vector<double> residual_;  // per pair, in (vehicles x bins_per_hour) units
  std::int64_t next_id_{0};
};

}  // namespace savsim
