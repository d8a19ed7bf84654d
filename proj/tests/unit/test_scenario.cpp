#include <doctest.h>

#include "emitloc/scenario.hpp"
#include "support.hpp"

using namespace emitloc;

TEST_SUITE("scenario") {
  TEST_CASE("time of arrival") {
    CHECK(toa({3, 4, 0}, {0, 0, 0}) == doctest::Approx(5.0 / kSpeedOfLight).epsilon(1e-15));
    CHECK(toa({3, 4, 0}, {0, 0, 0}) == doctest::Approx(1.66782e-8).epsilon(1e-5));
    CHECK(toa({1, 2, 3}, {1, 2, 3}) == 0.0);
    CHECK(toa({0, 0, 299792458.0}, {0, 0, 0}) == doctest::Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("one station per arc, radii inside the annulus") {
    GeometryConfig g;
    g.num_stations = 6;
    Rng rng(42);
    for (int rep = 0; rep < 200; ++rep) {
      const Scenario s = sample_scenario(g, rng);
      REQUIRE(s.stations.size() == 6);
      for (int m = 0; m < 6; ++m) {
        const auto& p = s.stations[m];
        const double r = std::hypot(p.x, p.y);
        CHECK(r >= 45.0);
        CHECK(r <= 55.0);
        double a = std::atan2(p.y, p.x);
        if (a < 0) a += kTwoPi;
        CHECK(a >= m * kTwoPi / 6 - 1e-12);
        CHECK(a <= (m + 1) * kTwoPi / 6 + 1e-12);
      }
      CHECK(norm(s.emitter) <= 25.0);
    }
  }

  TEST_CASE("emitter stays in the disc and sampling is reproducible") {
    GeometryConfig g;
    Rng a(7), b(7), c(8);
    const Scenario sa = sample_scenario(g, a);
    const Scenario sb = sample_scenario(g, b);
    const Scenario sc = sample_scenario(g, c);
    CHECK(sa.emitter == sb.emitter);
    CHECK(sa.stations == sb.stations);
    CHECK_FALSE(sa.emitter == sc.emitter);
  }

  TEST_CASE("uniform in area") {
    // P(r <= R/2) = 1/4 for a uniform disc.
    GeometryConfig g;
    Rng rng(3);
    int inner = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) inner += norm(sample_scenario(g, rng).emitter) <= 12.5;
    CHECK(inner / double(n) == doctest::Approx(0.25).epsilon(0.06));
  }

  TEST_CASE("invalid geometry is rejected") {
    GeometryConfig g;
    g.num_stations = 1;
    CHECK_THROWS_AS(validate(g), ConfigError);
    g = {};
    g.emitter_radius = 50.0;
    CHECK_THROWS_AS(validate(g), ConfigError);
    Scenario s{{0, 0, 0}, {{1, 0, 0}, {1, 0, 0}}};
    CHECK_THROWS_AS(validate(s), ValidationError);
  }
}
