#include <doctest.h>

#include "emitloc/channel.hpp"
#include "support.hpp"

using namespace emitloc;
using testing::rel_diff;

TEST_SUITE("channel") {
  TEST_CASE("steering vector") {
    const FrequencyGrid grid{16, 160e6};
    CHECK((steering_vector(0.0, grid) - CVector::Ones(16)).norm() == 0.0);
    CHECK((steering_vector(grid.window_duration(), grid) - CVector::Ones(16)).norm() < 1e-12);
    const CVector g = steering_vector(37.3e-9, grid);
    for (int k = 0; k < 16; ++k) {
      CHECK(std::abs(g[k]) == doctest::Approx(1.0).epsilon(1e-15));
      CHECK(std::arg(g[k] * std::polar(1.0, kTwoPi * grid.frequency(k) * 37.3e-9)) ==
            doctest::Approx(0.0).epsilon(1e-9));
    }
  }

  TEST_CASE("exponential profiles") {
    const Pdp p1 = exp_pdp(ExpPdpParams::exp1());
    REQUIRE(p1.size() == 100);
    CHECK(p1.variances[0] == 0.45);
    CHECK(p1.variances[1] == doctest::Approx(0.1 * std::exp(-1.0 / 20.0)).epsilon(1e-14));
    CHECK(p1.variances[1] == doctest::Approx(0.095123).epsilon(1e-5));
    const Pdp p2 = exp_pdp(ExpPdpParams::exp2());
    REQUIRE(p2.size() == 300);
    CHECK(p2.variances[299] == doctest::Approx(0.13 * std::exp(-299.0 / 30.0)).epsilon(1e-14));
    auto los = ExpPdpParams::exp1();
    los.mu0_nlos = 0.0;
    const Pdp p3 = exp_pdp(los);
    CHECK(p3.variances[0] == 0.45);
    for (int n = 1; n < p3.size(); ++n) CHECK(p3.variances[n] == 0.0);
  }

  TEST_CASE("rayleigh taps have the profile variance") {
    Pdp pdp;
    pdp.delta_tau = 1e-9;
    pdp.variances = {1.0, 0.5, 0.0, 0.02};
    Rng rng(1);
    std::vector<double> power(4, 0.0);
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      const auto ch = sample_rayleigh_channel(pdp, rng);
      REQUIRE(ch.taps.size() == 4);
      CHECK(ch.taps[2].gain == cplx{0.0, 0.0});
      for (int t = 0; t < 4; ++t) power[t] += std::norm(ch.taps[t].gain) / n;
    }
    for (int t : {0, 1, 3}) CHECK(power[t] == doctest::Approx(pdp.variances[t]).epsilon(0.05));

    Rng a(5), b(5), c(6);
    const auto ra = sample_rayleigh_channel(pdp, a);
    const auto rb = sample_rayleigh_channel(pdp, b);
    const auto rc = sample_rayleigh_channel(pdp, c);
    CHECK(ra.taps[0].gain == rb.taps[0].gain);
    CHECK(ra.taps[0].gain != rc.taps[0].gain);
  }

  TEST_CASE("cluster generator limits") {
    ClusterParams p;
    p.cluster_rate = 0.0;
    p.ray_rate = 0.0;
    Rng rng(2);
    CHECK(sample_cluster_channel(p, rng).taps.size() == 1);

    // One cluster with Poisson rays: one ray at zero plus rate * span.
    p.ray_rate = 1.0 / 2e-9;
    p.max_delay = 100e-9;
    double taps = 0.0;
    const int n = 1000;
    for (int i = 0; i < n; ++i) {
      const auto ch = sample_cluster_channel(p, rng);
      taps += ch.taps.size();
      for (std::size_t t = 1; t < ch.taps.size(); ++t) CHECK(ch.taps[t].delay >= ch.taps[t - 1].delay);
    }
    CHECK(taps / n == doctest::Approx(1.0 + p.ray_rate * p.max_delay).epsilon(0.10));

    // One cluster reduces to a single exponential profile.
    std::vector<ChannelRealization> draws;
    for (int i = 0; i < 4000; ++i) draws.push_back(sample_cluster_channel(p, rng));
    const Pdp emp = empirical_pdp(draws, 10e-9, 10);
    // Expected power per 10 ns cell: rate * integral of exp(-t/decay) over the cell (+1 for the first ray).
    for (int n_cell = 2; n_cell < 6; ++n_cell) {
      const double a0 = (n_cell - 0.5) * 10e-9, a1 = (n_cell + 0.5) * 10e-9;
      const double expect = p.ray_rate * p.ray_decay * (std::exp(-a0 / p.ray_decay) - std::exp(-a1 / p.ray_decay));
      CHECK(emp.variances[n_cell] == doctest::Approx(expect).epsilon(0.15));
    }

    // Infinite decays: flat expected power.
    p.ray_decay = std::numeric_limits<double>::infinity();
    draws.clear();
    for (int i = 0; i < 4000; ++i) draws.push_back(sample_cluster_channel(p, rng));
    const Pdp flat = empirical_pdp(draws, 10e-9, 10);
    for (int n_cell = 1; n_cell < 9; ++n_cell) CHECK(flat.variances[n_cell] == doctest::Approx(5.0).epsilon(0.1));
  }

  TEST_CASE("empirical profile") {
    const Pdp exp1 = exp_pdp(ExpPdpParams::exp1());
    Rng rng(9);
    std::vector<ChannelRealization> draws;
    for (int i = 0; i < 1000; ++i) draws.push_back(sample_rayleigh_channel(exp1, rng));
    const Pdp emp = empirical_pdp(draws, exp1.delta_tau, exp1.size());
    for (int n = 0; n < exp1.size(); ++n)
      if (exp1.variances[n] > 0.01) CHECK(emp.variances[n] == doctest::Approx(exp1.variances[n]).epsilon(0.15));

    const std::vector<ChannelRealization> one{testing::single_tap()};
    const Pdp single = empirical_pdp(one, 1e-9, 5);
    CHECK(single.variances == std::vector<double>{1, 0, 0, 0, 0});

    auto doubled = draws;
    for (auto& ch : doubled)
      for (auto& t : ch.taps) t.gain *= 2.0;
    const Pdp emp4 = empirical_pdp(doubled, exp1.delta_tau, exp1.size());
    for (int n = 0; n < exp1.size(); ++n) CHECK(emp4.variances[n] == doctest::Approx(4.0 * emp.variances[n]));

    const std::vector<ChannelRealization> late{ChannelRealization{{Tap{50e-9, {1, 0}}}}};
    CHECK_THROWS_AS(empirical_pdp(late, 1e-9, 10), RangeError);
  }

  TEST_CASE("covariance and factor") {
    const FrequencyGrid grid{16, 160e6};
    const Pdp one{1e-9, {1.0}};
    const auto c1 = channel_covariance(one, grid);
    CHECK(rel_diff(c1.H, CMatrix::Ones(16, 16)) < 1e-14);

    const Pdp exp1 = exp_pdp(ExpPdpParams::exp1());
    const auto c = channel_covariance(exp1, grid);
    for (int k = 0; k < 16; ++k) CHECK(c.H(k, k).real() == doctest::Approx(exp1.total_power()).epsilon(1e-12));
    CHECK((c.H - c.U * c.U.adjoint()).norm() <= 1e-10 * c.H.norm());
    validate(c);
    const auto ce = channel_covariance_eigen(exp1, grid);
    CHECK((ce.H - ce.U * ce.U.adjoint()).norm() <= 1e-8 * ce.H.norm());

    const CMatrix I = CMatrix::Identity(4, 4);
    const CMatrix U = eigen_factor(I);
    CHECK(rel_diff(U * U.adjoint(), I) < 1e-12);
    CHECK(rel_diff(U.adjoint() * U, I) < 1e-12);

    const CVector g = steering_vector(12e-9, FrequencyGrid{8, 100e6});
    const CMatrix u1 = eigen_factor(g * g.adjoint());
    REQUIRE(u1.cols() == 1);
    const cplx phase = u1(0, 0) / g[0];
    CHECK(std::abs(phase) == doctest::Approx(1.0));
    CHECK((u1.col(0) - phase * g).norm() < 1e-10);

    Rng rng(4);
    for (int rep = 0; rep < 10; ++rep) {
      const CMatrix H = testing::random_psd(8, 5, rng);
      const CMatrix F = eigen_factor(H);
      CHECK((H - F * F.adjoint()).norm() <= 1e-8 * H.norm());
    }
  }
}
