#include <doctest.h>

#include <sstream>

#include "emitloc/harness.hpp"

using namespace emitloc;

namespace {

RunConfig tiny_config() {
  RunConfig c;
  c.axis = SweepAxis::Snr;
  c.axis_values = {10.0, 20.0};
  c.K = 8;
  c.D = 2;
  c.fs = 40e6;
  c.channel.exp = ExpPdpParams::exp1();
  c.geometry.num_stations = 4;
  c.grid.half_extent = 25.0;
  c.grid.step = 5.0;
  c.grid.refine_levels = 1;
  c.num_configs = 2;
  c.trials_per_config = 2;
  c.estimators = {EstimatorKind::UsageCwc, EstimatorKind::Baseline};
  c.threads = 1;
  return c;
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char ch : s) n += ch == '\n';
  return n;
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("csv contract") {
    const SweepResult r = run_monte_carlo(tiny_config());
    const std::string csv = results_csv(r);
    CHECK(csv.rfind("axis,estimator,rmse_m,crlb_m,n_trials\n", 0) == 0);
    CHECK(count_lines(csv) == 1 + 2 * 2);
    for (const auto& pt : r.points) {
      CHECK(pt.n_trials == 4);
      for (double v : pt.rmse) CHECK(v >= 0.0);
      CHECK(pt.crlb_m >= 0.0);
    }
  }

  TEST_CASE("same seed, same bytes; thread count does not matter") {
    RunConfig c = tiny_config();
    const std::string a = results_csv(run_monte_carlo(c));
    const std::string b = results_csv(run_monte_carlo(c));
    CHECK(a == b);
    c.threads = 3;
    CHECK(results_csv(run_monte_carlo(c)) == a);
    c.seed = 2;
    CHECK(results_csv(run_monte_carlo(c)) != a);
  }

  TEST_CASE("config json round trip") {
    RunConfig c = tiny_config();
    c.signal.type = SignalType::Flat;
    c.signal.order = 16;
    c.channel.type = ChannelType::Cluster;
    c.channel.pdp_source = PdpSource::Empirical;
    c.channel.empirical_count = 50;
    c.known_magnitudes = true;
    c.seed = 123456789012345ULL;
    c.cache_dir = "cache";
    const std::string j = run_config_to_json(c);
    CHECK(run_config_to_json(run_config_from_json(j)) == j);
    SweepResult r;
    r.config = c;
    CHECK(run_config_to_json(run_config_from_json(results_json(r))) == j);
    CHECK_THROWS_AS(run_config_from_json("{\"axis\": \"bogus\"}"), ConfigError);
    CHECK_THROWS_AS(run_config_from_json("{"), ConfigError);
  }

  TEST_CASE("configuration errors surface before any trial") {
    RunConfig c = tiny_config();
    c.estimators.clear();
    CHECK_THROWS_AS(run_monte_carlo(c), ConfigError);
    c = tiny_config();
    c.trials_per_config = 0;
    CHECK_THROWS_AS(run_monte_carlo(c), ConfigError);
    c = tiny_config();
    c.grid.half_extent = 10.0;
    CHECK_THROWS_AS(run_monte_carlo(c), ConfigError);
    c = tiny_config();
    c.axis = SweepAxis::Stations;
    c.axis_values = {2.5};
    CHECK_THROWS_AS(run_monte_carlo(c), ConfigError);
    c = tiny_config();
    c.channel.type = ChannelType::Cluster;
    CHECK_THROWS_AS(run_monte_carlo(c), ConfigError);
  }

  TEST_CASE("single candidate at the truth gives zero error") {
    RunConfig c = tiny_config();
    c.axis_values = {200.0};
    c.num_configs = 1;
    c.trials_per_config = 1;
    c.geometry.emitter_radius = 1e-12;
    c.grid.half_extent = 1e-12;
    c.grid.step = 1.0;
    c.grid.refine_levels = 0;
    c.crlb = false;
    const SweepResult r = run_monte_carlo(c);
    for (double v : r.points[0].rmse) CHECK(v < 1e-11);
    CHECK(results_csv(r).find("nan") != std::string::npos);
  }

  TEST_CASE("delay-spread axis keeps the NLOS energy") {
    RunConfig c = tiny_config();
    c.axis = SweepAxis::DelaySpread;
    c.channel.exp = ExpPdpParams::exp2();
    auto nlos = [](const ExpPdpParams& p) {
      double s = 0.0;
      for (int l = 1; l < p.L; ++l) s += p.mu0_nlos * std::exp(-l * p.delta_tau / p.mu1);
      return s;
    };
    const double ref = nlos(c.channel.exp);
    for (double mu1 : {5.0, 30.0, 80.0}) {
      const ExpPdpParams p = exp_params_for_axis(c, mu1);
      CHECK(p.mu1 == doctest::Approx(mu1 * 1e-9));
      CHECK(nlos(p) == doctest::Approx(ref).epsilon(1e-12));
      CHECK(p.mu0_los == c.channel.exp.mu0_los);
    }
  }

  TEST_CASE("stations sweep with an empirical profile and disk cache") {
    RunConfig c = tiny_config();
    c.axis = SweepAxis::Stations;
    c.axis_values = {3.0, 5.0};
    c.channel.pdp_source = PdpSource::Empirical;
    c.channel.empirical_count = 200;
    c.cache_dir = (std::filesystem::temp_directory_path() / "emitloc_harness_cache").string();
    c.keep_trials = true;
    const SweepResult r = run_monte_carlo(c);
    CHECK(r.trials.size() == 8);
    for (const auto& t : r.trials)
      for (const auto& e : t.estimates) CHECK(e.squared_error >= 0.0);
    CHECK(results_json(r).find("\"trials\"") != std::string::npos);
  }
}
