#include <doctest.h>

#include <cmath>
#include <set>
#include <tuple>

#include "savsim/demand.hpp"

using namespace savsim;

namespace {

std::vector<double> uniform_coefficients() {
  return std::vector<double>(kHoursPerDay, 1.0 / 24.0);
}

}  // namespace

TEST_CASE("expand_daily_to_hourly: direct product and exact partition") {
  std::vector<OdRow> daily{{0, 0, 1, 2400.0}, {0, 1, 0, 97.0}};
  std::vector<double> coef(kHoursPerDay, 0.0);
  coef[7] = 0.10;
  coef[8] = 0.90;
  OdMatrix od = OdMatrix::expand_daily_to_hourly(2, daily, coef);
  CHECK(od.rate(7, 0, 1) == doctest::Approx(240.0));
  CHECK(od.rate(8, 0, 1) == doctest::Approx(2160.0));
  CHECK(od.rate(6, 0, 1) == 0.0);

  // Sum over hours equals the daily matrix exactly.
  OdMatrix uni = OdMatrix::expand_daily_to_hourly(2, daily, uniform_coefficients());
  double total01 = 0.0, total10 = 0.0;
  for (int h = 0; h < kHoursPerDay; ++h) {
    CHECK(uni.rate(h, 0, 1) == doctest::Approx(100.0));
    total01 += uni.rate(h, 0, 1);
    total10 += uni.rate(h, 1, 0);
  }
  CHECK(total01 == doctest::Approx(2400.0));
  CHECK(total10 == doctest::Approx(97.0));
}

TEST_CASE("expand_daily_to_hourly: coefficient validation") {
  std::vector<OdRow> daily{{0, 0, 1, 100.0}};
  std::vector<double> bad(kHoursPerDay, 1.0 / 24.0);
  bad[0] += 1e-6;
  CHECK_THROWS_AS(OdMatrix::expand_daily_to_hourly(2, daily, bad), ValidationError);
  std::vector<double> neg(kHoursPerDay, 1.0 / 24.0);
  neg[1] = -neg[1];
  CHECK_THROWS_AS(OdMatrix::expand_daily_to_hourly(2, daily, neg), ValidationError);
  CHECK_THROWS_AS(OdMatrix::expand_daily_to_hourly(2, daily, std::vector<double>(23, 0.0)),
                  ValidationError);
}

TEST_CASE("emit_requests: 120 veh/h gives exactly one request per bin") {
  OdMatrix od(2, {{7, 0, 1, 120.0}});
  RequestStream stream(od);
  for (int b = 0; b < 120; ++b) {
    const auto reqs = stream.emit(7 * 3600.0 + b * 30.0);
    CHECK(reqs.size() == 1);
  }
}

TEST_CASE("emit_requests: 60 veh/h alternates 0,1,0,1") {
  OdMatrix od(2, {{7, 0, 1, 60.0}});
  RequestStream stream(od);
  for (int b = 0; b < 120; ++b) {
    const auto reqs = stream.emit(7 * 3600.0 + b * 30.0);
    CHECK(reqs.size() == static_cast<std::size_t>(b % 2 == 1 ? 1 : 0));
  }
}

TEST_CASE("emit_requests: 90 veh/h emits exactly 90 over 120 bins (cumulative floor oracle)") {
  OdMatrix od(2, {{7, 0, 1, 90.0}});
  RequestStream stream(od);
  std::int64_t emitted = 0;
  for (int b = 0; b < 120; ++b) {
    emitted += static_cast<std::int64_t>(stream.emit(7 * 3600.0 + b * 30.0).size());
    // cumulative-floor oracle: floor(sum of per-bin rates)
    const auto oracle = static_cast<std::int64_t>(std::floor((b + 1) * 90.0 / 120.0 + 1e-9));
    CHECK(emitted == oracle);
  }
  CHECK(emitted == 90);
}

TEST_CASE("emit_requests: ids dense, order lexicographic by (origin, dest)") {
  OdMatrix od(3, {{7, 2, 0, 120.0}, {7, 0, 1, 240.0}, {7, 1, 2, 120.0}});
  RequestStream stream(od);
  std::set<std::int64_t> ids;
  std::int64_t expected_next = 0;
  for (int b = 0; b < 120; ++b) {
    const auto reqs = stream.emit(7 * 3600.0 + b * 30.0);
    for (std::size_t i = 0; i < reqs.size(); ++i) {
      CHECK(reqs[i].id == expected_next);
      ++expected_next;
      CHECK(ids.insert(reqs[i].id).second);
      if (i > 0) {
        const bool ordered = std::tie(reqs[i - 1].origin, reqs[i - 1].dest) <=
                             std::tie(reqs[i].origin, reqs[i].dest);
        CHECK(ordered);
      }
      CHECK(reqs[i].generation_s == 7 * 3600.0 + b * 30.0);
    }
  }
  CHECK(expected_next == 240 + 120 + 120);
}

TEST_CASE("emit_requests: carryover across hour boundaries stays exact") {
  OdMatrix od(2, {{7, 0, 1, 77.0}, {8, 0, 1, 41.0}});
  RequestStream stream(od);
  std::int64_t emitted = 0;
  for (int b = 0; b < 240; ++b)
    emitted += static_cast<std::int64_t>(stream.emit(7 * 3600.0 + b * 30.0).size());
  CHECK(emitted == 77 + 41);
}

TEST_CASE("expected_generation: flat rate, zero, and hour-straddling windows") {
  OdMatrix od(3, {{7, 0, 1, 120.0}, {8, 0, 2, 60.0}, {8, 0, 1, 60.0}});
  // 120 veh/h, 5-minute window -> 10
  CHECK(od.expected_generation(0, 7 * 3600.0, 7 * 3600.0 + 300.0) == doctest::Approx(10.0));
  // zero-demand zone
  CHECK(od.expected_generation(1, 7 * 3600.0, 7 * 3600.0 + 300.0) == 0.0);
  // straddling hours with rates 60 and 120 (2.5 min each) -> 2.5 + 5 = 7.5
  OdMatrix od2(2, {{6, 0, 1, 60.0}, {7, 0, 1, 120.0}});
  const double t0 = 7 * 3600.0 - 150.0;
  CHECK(od2.expected_generation(0, t0, t0 + 300.0) == doctest::Approx(7.5));
}

TEST_CASE("expected_generation: additivity over zones equals the total") {
  OdMatrix od(4, {{7, 0, 1, 50.0}, {7, 1, 2, 70.0}, {7, 3, 0, 30.0}, {8, 2, 3, 10.0}});
  const double t0 = 7 * 3600.0 + 1800.0;
  const double t1 = 8 * 3600.0 + 900.0;
  double sum = 0.0;
  for (ZoneIdx z = 0; z < 4; ++z) sum += od.expected_generation(z, t0, t1);
  CHECK(sum == doctest::Approx(od.expected_generation_total(t0, t1)));
  // arrivals mirror generations on the destination side
  double arr = 0.0;
  for (ZoneIdx z = 0; z < 4; ++z) arr += od.expected_arrivals(z, t0, t1);
  CHECK(arr == doctest::Approx(sum));
}

TEST_CASE("od matrix: validation of hours, zones and signs") {
  CHECK_THROWS_AS(OdMatrix(2, {{24, 0, 1, 5.0}}), ValidationError);
  CHECK_THROWS_AS(OdMatrix(2, {{0, 0, 2, 5.0}}), ValidationError);
  CHECK_THROWS_AS(OdMatrix(2, {{0, 0, 1, -5.0}}), ValidationError);
  CHECK_THROWS_AS(RequestStream(OdMatrix(2, {}), 7.0), ValidationError);
}
