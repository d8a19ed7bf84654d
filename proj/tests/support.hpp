#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "emitloc/channel.hpp"
#include "emitloc/random.hpp"
#include "emitloc/scenario.hpp"
#include "emitloc/signal.hpp"
#include "emitloc/types.hpp"

namespace testing {

using namespace emitloc;

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

inline double rel_diff(const CMatrix& a, const CMatrix& b) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-300});
}

inline CMatrix random_matrix(int rows, int cols, Rng& rng) {
  CMatrix A(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) A(i, j) = complex_gaussian(rng, 1.0);
  return A;
}

inline CMatrix random_psd(int n, int rank, Rng& rng) {
  const CMatrix B = random_matrix(n, rank, rng);
  return B * B.adjoint();
}

inline CVector random_unit_modulus(int n, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  CVector g(n);
  for (int i = 0; i < n; ++i) g[i] = std::polar(1.0, u(rng));
  return g;
}

/// Random small profile with `taps` taps on a 5 ns grid.
inline Pdp random_pdp(int taps, Rng& rng) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  Pdp p;
  p.delta_tau = 5e-9;
  for (int i = 0; i < taps; ++i) p.variances.push_back(u(rng));
  return p;
}

inline Scenario ring_scenario(int M, Rng& rng, double radius = 50.0) {
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  Scenario s;
  s.emitter = {u(rng), u(rng), 0.0};
  for (int m = 0; m < M; ++m) {
    const double a = kTwoPi * m / M + 0.1 * u(rng) / 10.0;
    s.stations.push_back({radius * std::cos(a), radius * std::sin(a), 0.0});
  }
  return s;
}

/// Observation set for `scenario` with Rayleigh channels drawn from `pdp`.
inline ObservationSet make_observations(const Scenario& sc, const Pdp& pdp, const TransmitSignal& x,
                                        const FrequencyGrid& grid, double noise_variance, Rng& rng) {
  std::vector<ChannelRealization> ch;
  for (std::size_t m = 0; m < sc.stations.size(); ++m) ch.push_back(sample_rayleigh_channel(pdp, rng));
  return synthesize_observations(sc, ch, x, grid, noise_variance, rng);
}

/// KD x K stack of per-window diagonals of x.
inline CMatrix stacked_diag(const CVector& x, int K, int D) {
  CMatrix X = CMatrix::Zero(K * D, K);
  for (int d = 0; d < D; ++d)
    for (int k = 0; k < K; ++k) X(k + K * d, k) = x[k + K * d];
  return X;
}

/// Dense evaluation of the per-station likelihood term
/// sigma^-4 y^H X G U (I + sigma^-2 U^H X^H X U)^-1 U^H G^H X^H y.
inline double likelihood_term(const CVector& y, const CVector& x, const CMatrix& U, double tau,
                              const FrequencyGrid& grid, int D, double sigma2) {
  const int K = grid.K;
  const CMatrix X = stacked_diag(x, K, D);
  const CMatrix G = steering_vector(tau, grid).asDiagonal();
  const CMatrix core =
      CMatrix::Identity(U.cols(), U.cols()) + (U.adjoint() * X.adjoint() * X * U) / sigma2;
  const CVector z = U.adjoint() * G.adjoint() * X.adjoint() * y;
  const cplx a = z.dot(core.inverse() * z);
  return a.real() / (sigma2 * sigma2);
}

inline ChannelRealization single_tap(cplx gain = {1.0, 0.0}) { return ChannelRealization{{Tap{0.0, gain}}}; }

}  // namespace testing
