#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>

#include "emitloc/estimator.hpp"
#include "support.hpp"

using namespace emitloc;
using testing::rel_diff;

namespace {

ChannelCovariance identity_cov(int K) { return {CMatrix::Identity(K, K), CMatrix::Identity(K, K)}; }

}  // namespace

TEST_SUITE("estimator") {
  TEST_CASE("magnitude estimate") {
    const FrequencyGrid grid{8, 80e6};
    Rng rng(1);
    const TransmitSignal x = gen_white(8, 2, rng);
    ObservationSet obs{{x.x}, grid, 2, 0.0};
    const std::vector<ChannelCovariance> covs{identity_cov(8)};
    const MagnitudeEstimate est = estimate_magnitudes(obs, covs);
    CHECK((est.values - x.magnitudes()).norm() < 1e-14);

    obs.y[0].setZero();
    CHECK(estimate_magnitudes(obs, covs).values.isZero(0.0));

    ChannelCovariance bad = identity_cov(8);
    bad.H(3, 3) = 0.0;
    obs.y[0] = x.x;
    const std::vector<ChannelCovariance> bad_covs{bad};
    CHECK_THROWS_AS(estimate_magnitudes(obs, bad_covs), DegenerateChannelError);
  }

  TEST_CASE("magnitude estimate averages out fading") {
    const FrequencyGrid grid{16, 160e6};
    Rng rng(2);
    const Pdp pdp = exp_pdp(ExpPdpParams::exp1());
    const auto cov = channel_covariance(pdp, grid);
    const Scenario sc = testing::ring_scenario(64, rng);
    const TransmitSignal x = gen_white(16, 2, rng);
    const ObservationSet obs = testing::make_observations(sc, pdp, x, grid, 0.0, rng);
    const std::vector<ChannelCovariance> covs(64, cov);
    const RVector est = estimate_magnitudes(obs, covs).values;
    std::vector<double> err;
    for (int i = 0; i < est.size(); ++i) err.push_back(std::abs(est[i] - std::abs(x.x[i])) / std::abs(x.x[i]));
    std::nth_element(err.begin(), err.begin() + err.size() / 2, err.end());
    CHECK(err[err.size() / 2] < 0.15);
  }

  TEST_CASE("cost matrix structure") {
    const FrequencyGrid grid{8, 80e6};
    Rng rng(3);
    const Scenario sc = testing::ring_scenario(3, rng);
    const Pdp pdp = testing::random_pdp(3, rng);
    const auto cov = channel_covariance(pdp, grid);
    const std::vector<ChannelCovariance> covs(3, cov);
    const TransmitSignal x = gen_white(8, 2, rng);
    ObservationSet obs = testing::make_observations(sc, pdp, x, grid, 0.1, rng);
    const MagnitudeEstimate mag = estimate_magnitudes(obs, covs);
    for (int rep = 0; rep < 5; ++rep) {
      const Position q{rep * 3.0, -rep * 1.5, 0.0};
      const CMatrix A = cost_matrix_A(obs, covs, sc.stations, q, mag);
      CHECK((A - A.adjoint()).norm() <= 1e-12 * A.norm());
      Eigen::SelfAdjointEigenSolver<CMatrix> es(A, Eigen::EigenvaluesOnly);
      CHECK(es.eigenvalues().minCoeff() >= -1e-10 * es.eigenvalues().maxCoeff());
    }
    ObservationSet zero = obs;
    for (auto& y : zero.y) y.setZero();
    CHECK(cost_matrix_A(zero, covs, sc.stations, {0, 0, 0}, mag).isZero(0.0));
  }

  TEST_CASE("quadratic form equals the summed likelihood terms") {
    const FrequencyGrid grid{4, 40e6};
    Rng rng(4);
    for (int rep = 0; rep < 20; ++rep) {
      const Scenario sc = testing::ring_scenario(2, rng);
      const Pdp pdp = testing::random_pdp(2 + rep % 3, rng);
      const auto cov = channel_covariance(pdp, grid);
      const std::vector<ChannelCovariance> covs(2, cov);
      const TransmitSignal x = gen_white(4, 1, rng);
      const ObservationSet obs = testing::make_observations(sc, pdp, x, grid, 0.3, rng);
      const MagnitudeEstimate mag = estimate_magnitudes(obs, covs);
      const Position q{rep - 10.0, 2.0, 0.0};
      const CMatrix A = cost_matrix_A(obs, covs, sc.stations, q, mag);
      const CVector gamma = testing::random_unit_modulus(4, rng);
      const CVector xg = mag.values.cast<cplx>().cwiseProduct(gamma);
      double sum = 0.0;
      for (int m = 0; m < 2; ++m)
        sum += testing::likelihood_term(obs.y[m], xg, cov.U, toa(q, sc.stations[m]), grid, 1, obs.noise_variance);
      CHECK(rel_diff(quadratic_form(A, gamma.conjugate()), sum) < 1e-8);
    }
  }

  TEST_CASE("cost vanishes with large noise variance") {
    const FrequencyGrid grid{8, 80e6};
    Rng rng(5);
    const Scenario sc = testing::ring_scenario(3, rng);
    const Pdp pdp = testing::random_pdp(3, rng);
    const std::vector<ChannelCovariance> covs(3, channel_covariance(pdp, grid));
    const TransmitSignal x = gen_white(8, 1, rng);
    ObservationSet obs = testing::make_observations(sc, pdp, x, grid, 0.1, rng);
    const MagnitudeEstimate mag = estimate_magnitudes(obs, covs);
    double prev = cost_c1(obs, covs, sc.stations, sc.emitter, mag, {}).cost;
    for (double nv : {1e2, 1e4, 1e6}) {
      obs.noise_variance = nv;
      const double c = cost_c1(obs, covs, sc.stations, sc.emitter, mag, {}).cost;
      CHECK(c < prev);
      prev = c;
    }
    CHECK(prev < 1e-9);
  }

  TEST_CASE("uniform phase shift leaves the cost unchanged") {
    const FrequencyGrid grid{8, 80e6};
    Rng rng(6);
    const Scenario sc = testing::ring_scenario(4, rng);
    const Pdp pdp = testing::random_pdp(4, rng);
    const std::vector<ChannelCovariance> covs(4, channel_covariance(pdp, grid));
    const TransmitSignal x = gen_white(8, 2, rng);
    const ObservationSet obs = testing::make_observations(sc, pdp, x, grid, 0.05, rng);
    ObservationSet shifted = obs;
    const CVector phases = testing::random_unit_modulus(16, rng);
    for (auto& y : shifted.y) y = y.cwiseProduct(phases);
    const MagnitudeEstimate mag = estimate_magnitudes(obs, covs);
    for (int rep = 0; rep < 5; ++rep) {
      const Position q{rep * 4.0 - 8.0, 3.0, 0.0};
      const double a = cost_c1(obs, covs, sc.stations, q, mag, {}).cost;
      const double b = cost_c1(shifted, covs, sc.stations, q, mag, {}).cost;
      CHECK(rel_diff(a, b) < 1e-8);
    }
  }

  TEST_CASE("true position beats a far one without noise") {
    const FrequencyGrid grid{16, 160e6};
    const Pdp pdp = exp_pdp(ExpPdpParams::exp1());
    const auto cov = channel_covariance_eigen(pdp, grid);
    const std::vector<ChannelCovariance> covs(8, cov);
    Rng rng(7);
    GeometryConfig geo;
    geo.num_stations = 8;
    int wins = 0;
    for (int t = 0; t < 100; ++t) {
      const Scenario sc = sample_scenario(geo, rng);
      const TransmitSignal x = gen_white(16, 1, rng);
      ObservationSet obs = testing::make_observations(sc, pdp, x, grid, 0.0, rng);
      obs.noise_variance = 1e-4;  // model noise floor
      const MagnitudeEstimate mag = estimate_magnitudes(obs, covs);
      std::uniform_real_distribution<double> ang(0.0, kTwoPi);
      const double a = ang(rng);
      const Position far{sc.emitter.x + 35.0 * std::cos(a), sc.emitter.y + 35.0 * std::sin(a), 0.0};
      const double c_true = cost_c1(obs, covs, sc.stations, sc.emitter, mag, {}).cost;
      const double c_far = cost_c1(obs, covs, sc.stations, far, mag, {}).cost;
      wins += c_true >= c_far;
    }
    CHECK(wins >= 90);
  }

  TEST_CASE("grid argmax") {
    RVector c(4);
    c << 1.0, 3.0, 3.0, 2.0;
    CHECK(argmax_first(c) == 1);
    CHECK_THROWS_AS(argmax_first(RVector()), ValidationError);

    const CandidateSet g = planar_grid(1.0, 2.0, 2.0, 1.0, 0.5);
    REQUIRE(g.positions.size() == 25);
    CHECK(g.positions[0] == Position{-1.0, 0.0, 0.5});
    CHECK(g.positions[1] == Position{0.0, 0.0, 0.5});
    CHECK(g.positions[24] == Position{3.0, 4.0, 0.5});

    // A single candidate is returned whatever its cost.
    const FrequencyGrid grid{4, 40e6};
    Rng rng(8);
    const Scenario sc = testing::ring_scenario(2, rng);
    const Pdp pdp = testing::random_pdp(2, rng);
    const std::vector<ChannelCovariance> covs(2, channel_covariance(pdp, grid));
    const ObservationSet obs = testing::make_observations(sc, pdp, gen_white(4, 1, rng), grid, 0.1, rng);
    const CandidateSet one{{Position{40.0, 40.0, 0.0}}};
    CHECK(usage_estimate(obs, covs, sc.stations, one, {}).q_hat == Position{40.0, 40.0, 0.0});
  }

  TEST_CASE("single path recovers the grid node") {
    const FrequencyGrid grid{16, 160e6};
    const Pdp los{1e-9, {1.0}};
    const auto cov = channel_covariance(los, grid);
    const std::vector<ChannelCovariance> covs(6, cov);
    const CandidateSet cands = planar_grid(0.0, 0.0, 25.0, 5.0, 0.0);
    Rng rng(9);
    GeometryConfig geo;
    int hits = 0;
    std::uniform_int_distribution<int> node(0, static_cast<int>(cands.positions.size()) - 1);
    for (int t = 0; t < 100; ++t) {
      Scenario sc = sample_scenario(geo, rng);
      sc.emitter = cands.positions[node(rng)];
      std::vector<ChannelRealization> ch;
      for (int m = 0; m < 6; ++m) ch.push_back(sample_rayleigh_channel(los, rng));
      ObservationSet obs = synthesize_observations(sc, ch, gen_white(16, 1, rng), grid, 0.0, rng);
      obs.noise_variance = 1e-6;
      hits += usage_estimate(obs, covs, sc.stations, cands, {}).q_hat == sc.emitter;
    }
    CHECK(hits >= 95);
  }

  TEST_CASE("refined search narrows in on a smooth peak") {
    GridSearchConfig cfg;
    cfg.half_extent = 10.0;
    cfg.step = 2.0;
    cfg.refine_levels = 2;
    const Position peak{3.37, -4.71, 0.0};
    const auto res = refined_grid_search(cfg, [&](const CandidateSet& c) {
      RVector s(static_cast<Eigen::Index>(c.positions.size()));
      for (std::size_t i = 0; i < c.positions.size(); ++i) s[i] = -squared_distance(c.positions[i], peak);
      return s;
    });
    CHECK(distance(res.q_hat, peak) <= 0.08 * std::sqrt(2.0) / 2 + 1e-12);
    cfg.step = 0.0;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
  }

  TEST_CASE("known magnitudes agree with estimated ones for a flat signal") {
    const FrequencyGrid grid{16, 80e6};
    const Pdp pdp = exp_pdp(ExpPdpParams::exp2());
    const auto cov = channel_covariance_eigen(pdp, grid);
    const std::vector<ChannelCovariance> covs(8, cov);
    GeometryConfig geo;
    geo.num_stations = 8;
    Rng rng(10);
    int same = 0;
    for (int t = 0; t < 100; ++t) {
      const Scenario sc = sample_scenario(geo, rng);
      const TransmitSignal x = gen_flat_psk(16, 1, 256, rng);
      const double nv = noise_variance_for_snr(x, pdp.total_power(), 20.0);
      const ObservationSet obs = testing::make_observations(sc, pdp, x, grid, nv, rng);
      const CandidateSet cands = planar_grid(sc.emitter.x, sc.emitter.y, 4.0, 1.0, 0.0);
      const auto est = usage_estimate(obs, covs, sc.stations, cands, {});
      const auto known = usage_estimate(obs, covs, sc.stations, cands, {}, x.magnitudes());
      same += est.best_index == known.best_index;
    }
    CHECK(same >= 80);
  }
}
