#include "emitloc/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

namespace emitloc {

RVector FrequencyGrid::frequencies() const {
  RVector f(K);
  for (int k = 0; k < K; ++k) f[k] = frequency(k);
  return f;
}

void validate(const FrequencyGrid& grid) {
  if (grid.K < 1) throw ConfigError("frequency grid: K must be >= 1");
  if (!(grid.fs > 0.0) || !std::isfinite(grid.fs)) throw ConfigError("frequency grid: Fs must be positive");
}

CVector steering_vector(double tau, const FrequencyGrid& grid) {
  CVector g(grid.K);
  for (int k = 0; k < grid.K; ++k) g[k] = std::polar(1.0, -kTwoPi * grid.frequency(k) * tau);
  return g;
}

void validate(const ExpPdpParams& p) {
  if (!(p.mu0_los >= 0.0) || !(p.mu0_nlos >= 0.0)) throw ConfigError("exp pdp: mu0 terms must be >= 0");
  if (p.mu0_los == 0.0 && p.mu0_nlos == 0.0) throw ConfigError("exp pdp: both mu0 terms are zero");
  if (!(p.mu1 > 0.0)) throw ConfigError("exp pdp: mu1 must be > 0");
  if (!(p.delta_tau > 0.0)) throw ConfigError("exp pdp: delta_tau must be > 0");
  if (p.L < 1) throw ConfigError("exp pdp: L must be >= 1");
}

double Pdp::total_power() const {
  double s = 0.0;
  for (double v : variances) s += v;
  return s;
}

void validate(const Pdp& pdp) {
  if (!(pdp.delta_tau > 0.0)) throw ValidationError("pdp: delta_tau must be > 0");
  if (pdp.variances.empty()) throw ValidationError("pdp: no taps");
  bool any_positive = false;
  for (double v : pdp.variances) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("pdp: variances must be finite and >= 0");
    any_positive = any_positive || v > 0.0;
  }
  if (!any_positive) throw ValidationError("pdp: all variances are zero");
}

Pdp exp_pdp(const ExpPdpParams& params) {
  validate(params);
  Pdp pdp;
  pdp.delta_tau = params.delta_tau;
  pdp.variances.resize(params.L);
  pdp.variances[0] = params.mu0_los;
  for (int l = 1; l < params.L; ++l)
    pdp.variances[l] = params.mu0_nlos * std::exp(-l * params.delta_tau / params.mu1);
  return pdp;
}

ChannelRealization sample_rayleigh_channel(const Pdp& pdp, Rng& rng) {
  validate(pdp);
  ChannelRealization ch;
  ch.taps.resize(pdp.variances.size());
  for (std::size_t n = 0; n < pdp.variances.size(); ++n) {
    ch.taps[n].delay = static_cast<double>(n) * pdp.delta_tau;
    const double v = pdp.variances[n];
    // Always draw so the stream layout does not depend on which taps are zero.
    const cplx g = complex_gaussian(rng, 1.0);
    ch.taps[n].gain = v > 0.0 ? std::sqrt(v) * g : cplx{0.0, 0.0};
  }
  return ch;
}

void validate(const ClusterParams& p) {
  if (!(p.cluster_rate >= 0.0) || !std::isfinite(p.cluster_rate))
    throw ConfigError("cluster channel: cluster_rate must be finite and >= 0");
  if (!(p.ray_rate >= 0.0) || !std::isfinite(p.ray_rate))
    throw ConfigError("cluster channel: ray_rate must be finite and >= 0");
  if (!(p.cluster_decay > 0.0) || !(p.ray_decay > 0.0))
    throw ConfigError("cluster channel: decay constants must be > 0");
  if (!(p.max_delay > 0.0) || !std::isfinite(p.max_delay))
    throw ConfigError("cluster channel: max_delay must be finite and > 0");
  if (!(p.omega0 > 0.0) || !std::isfinite(p.omega0)) throw ConfigError("cluster channel: omega0 must be > 0");
  if (p.max_clusters < 1) throw ConfigError("cluster channel: max_clusters must be >= 1");
  const double expected = (1.0 + p.cluster_rate * p.max_delay) * (1.0 + p.ray_rate * p.max_delay);
  if (expected > 1e6) throw ConfigError("cluster channel: rates imply more than 1e6 expected arrivals");
}

ChannelRealization sample_cluster_channel(const ClusterParams& params, Rng& rng) {
  validate(params);
  ChannelRealization ch;
  std::exponential_distribution<double> cluster_gap(params.cluster_rate > 0.0 ? params.cluster_rate : 1.0);
  std::exponential_distribution<double> ray_gap(params.ray_rate > 0.0 ? params.ray_rate : 1.0);

  double cluster_time = 0.0;
  for (int c = 0; c < params.max_clusters && cluster_time < params.max_delay; ++c) {
    const double cluster_power = params.omega0 * std::exp(-cluster_time / params.cluster_decay);
    double ray_time = 0.0;
    while (cluster_time + ray_time < params.max_delay) {
      const double power = cluster_power * std::exp(-ray_time / params.ray_decay);
      ch.taps.push_back({cluster_time + ray_time, complex_gaussian(rng, power)});
      if (params.ray_rate == 0.0) break;
      ray_time += ray_gap(rng);
    }
    if (params.cluster_rate == 0.0) break;
    cluster_time += cluster_gap(rng);
  }
  std::stable_sort(ch.taps.begin(), ch.taps.end(), [](const Tap& a, const Tap& b) { return a.delay < b.delay; });
  return ch;
}

Pdp empirical_pdp(std::span<const ChannelRealization> realizations, double delta_tau, int n_h) {
  if (realizations.empty()) throw ValidationError("empirical pdp: no realizations");
  if (!(delta_tau > 0.0) || n_h < 1) throw ConfigError("empirical pdp: need delta_tau > 0 and N_h >= 1");
  Pdp pdp;
  pdp.delta_tau = delta_tau;
  pdp.variances.assign(n_h, 0.0);
  const double span = n_h * delta_tau;
  for (const auto& ch : realizations) {
    for (const auto& tap : ch.taps) {
      if (!(tap.delay >= 0.0) || tap.delay >= span)
        throw RangeError("empirical pdp: tap delay " + std::to_string(tap.delay) + " s outside grid of " +
                         std::to_string(n_h) + " cells");
      const int n = std::min(n_h - 1, static_cast<int>(std::lround(tap.delay / delta_tau)));
      pdp.variances[n] += std::norm(tap.gain);
    }
  }
  const double inv = 1.0 / static_cast<double>(realizations.size());
  for (double& v : pdp.variances) v *= inv;
  return pdp;
}

void validate(const ChannelCovariance& cov) {
  const auto& H = cov.H;
  if (H.rows() != H.cols() || H.rows() == 0) throw ValidationError("channel covariance: H must be square");
  if (cov.U.rows() != H.rows()) throw ValidationError("channel covariance: factor has wrong row count");
  const double h_norm = H.norm();
  if ((H - H.adjoint()).norm() > 1e-10 * std::max(h_norm, 1e-300))
    throw ValidationError("channel covariance: H is not Hermitian");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(H, Eigen::EigenvaluesOnly);
  const double trace = H.trace().real();
  if (es.eigenvalues().minCoeff() < -1e-10 * std::abs(trace))
    throw ValidationError("channel covariance: H is not positive semi-definite");
  if ((H - cov.U * cov.U.adjoint()).norm() > 1e-8 * h_norm)
    throw ValidationError("channel covariance: U U^H does not reproduce H");
}

ChannelCovariance channel_covariance(const Pdp& pdp, const FrequencyGrid& grid) {
  validate(pdp);
  validate(grid);
  const int K = grid.K;
  ChannelCovariance cov;

  // H[k, k'] = sum_n sigma_n^2 exp(-j 2 pi (f_k - f_k') n dtau): Toeplitz in k - k'.
  CVector first(K);
  for (int diff = 0; diff < K; ++diff) {
    const double df = grid.frequency(diff);
    cplx s{0.0, 0.0};
    for (int n = 0; n < pdp.size(); ++n) {
      const double v = pdp.variances[n];
      if (v > 0.0) s += v * std::polar(1.0, -kTwoPi * df * n * pdp.delta_tau);
    }
    first[diff] = s;
  }
  cov.H.resize(K, K);
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j) cov.H(i, j) = i >= j ? first[i - j] : std::conj(first[j - i]);

  int r = 0;
  for (double v : pdp.variances) r += v > 0.0 ? 1 : 0;
  cov.U.resize(K, r);
  int col = 0;
  for (int n = 0; n < pdp.size(); ++n) {
    const double v = pdp.variances[n];
    if (v > 0.0) cov.U.col(col++) = std::sqrt(v) * steering_vector(n * pdp.delta_tau, grid);
  }
  return cov;
}

CMatrix eigen_factor(const CMatrix& H, double eps_rank) {
  if (H.rows() != H.cols() || H.rows() == 0) throw ValidationError("eigen_factor: H must be square");
  if (!(eps_rank >= 0.0)) throw ConfigError("eigen_factor: eps_rank must be >= 0");
  const double h_norm = H.norm();
  if ((H - H.adjoint()).norm() > 1e-8 * std::max(h_norm, 1e-300))
    throw ValidationError("eigen_factor: H is not Hermitian");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(H);
  const RVector& lambda = es.eigenvalues();  // ascending
  const double lambda_max = lambda.maxCoeff();
  std::vector<int> keep;
  for (int i = static_cast<int>(lambda.size()) - 1; i >= 0; --i)
    if (lambda[i] > eps_rank * lambda_max && lambda[i] > 0.0) keep.push_back(i);
  CMatrix U(H.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c)
    U.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(keep[c]) * std::sqrt(lambda[keep[c]]);
  return U;
}

ChannelCovariance channel_covariance_eigen(const Pdp& pdp, const FrequencyGrid& grid, double eps_rank) {
  ChannelCovariance cov = channel_covariance(pdp, grid);
  cov.U = eigen_factor(cov.H, eps_rank);
  return cov;
}

}  // namespace emitloc
