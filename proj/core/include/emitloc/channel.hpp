#pragma once

#include <span>
#include <vector>

#include "emitloc/random.hpp"
#include "emitloc/types.hpp"

namespace emitloc {

/// DFT bin frequencies f_k = k * Fs / K of one observation window.
struct FrequencyGrid {
  int K{16};
  double fs{160e6};

  double frequency(int k) const { return static_cast<double>(k) * fs / static_cast<double>(K); }
  RVector frequencies() const;
  /// Length of one window, K / Fs.
  double window_duration() const { return static_cast<double>(K) / fs; }
};

void validate(const FrequencyGrid& grid);

/// Element k is exp(-j 2 pi f_k tau).
CVector steering_vector(double tau, const FrequencyGrid& grid);

/// Exponentially decaying profile: a LOS tap of power mu0_los at zero excess
/// delay followed by L-1 NLOS taps of power mu0_nlos * exp(-l dtau / mu1).
struct ExpPdpParams {
  double mu0_los{0.45};
  double mu0_nlos{0.1};
  double mu1{20e-9};
  double delta_tau{1e-9};
  int L{100};

  static ExpPdpParams exp1() { return {0.45, 0.1, 20e-9, 1e-9, 100}; }
  static ExpPdpParams exp2() { return {0.098, 0.13, 30e-9, 1e-9, 300}; }
};

void validate(const ExpPdpParams& p);

/// Power-delay profile on the grid n * delta_tau, n = 0..N_h-1.
struct Pdp {
  double delta_tau{1e-9};
  std::vector<double> variances;

  double total_power() const;
  int size() const { return static_cast<int>(variances.size()); }
};

void validate(const Pdp& pdp);

Pdp exp_pdp(const ExpPdpParams& params);

struct Tap {
  double delay{0.0};  // seconds, relative to the LOS arrival
  cplx gain{0.0, 0.0};
};

struct ChannelRealization {
  std::vector<Tap> taps;  // delays ascending, first at 0
};

/// Independent CN(0, sigma_n^2) gain per grid tap at delay n * delta_tau.
ChannelRealization sample_rayleigh_channel(const Pdp& pdp, Rng& rng);

/// Clustered multipath generator in the Saleh-Valenzuela style. Cluster
/// arrivals and ray arrivals inside each cluster are Poisson processes; the
/// expected ray power is omega0 * exp(-T / cluster_decay) * exp(-tau / ray_decay).
/// Gains are circular complex Gaussian. The first cluster and the first ray of
/// every cluster arrive at their nominal time, so the first tap is at 0.
/// Decay constants may be +infinity (flat expected power). A zero cluster rate
/// yields a single cluster; a zero ray rate yields one ray per cluster.
struct ClusterParams {
  double cluster_rate{1.0 / 20e-9};  // 1/s
  double ray_rate{1.0 / 2e-9};       // 1/s
  double cluster_decay{20e-9};       // s
  double ray_decay{5e-9};            // s
  double max_delay{100e-9};          // s; arrivals at or beyond are dropped
  double omega0{1.0};
  int max_clusters{64};
};

void validate(const ClusterParams& p);

ChannelRealization sample_cluster_channel(const ClusterParams& params, Rng& rng);

/// Sample PDP: tap powers binned to the nearest grid cell and averaged over
/// the realizations. Throws RangeError when a delay is >= n_h * delta_tau.
Pdp empirical_pdp(std::span<const ChannelRealization> realizations, double delta_tau, int n_h);

/// Frequency-domain channel covariance H (K x K) with a factor U, H = U U^H.
struct ChannelCovariance {
  CMatrix H;
  CMatrix U;

  int K() const { return static_cast<int>(H.rows()); }
  int rank() const { return static_cast<int>(U.cols()); }
};

/// Throws ValidationError when H is not Hermitian within 1e-10 (relative),
/// has an eigenvalue below -1e-10 * trace, or U U^H misses H by more than
/// 1e-8 relative Frobenius.
void validate(const ChannelCovariance& cov);

/// H = sum_n sigma_n^2 g(n dtau) g(n dtau)^H; U holds the columns
/// sigma_n g(n dtau) for the strictly positive variances.
ChannelCovariance channel_covariance(const Pdp& pdp, const FrequencyGrid& grid);

/// U = V D^{1/2} over eigenpairs with eigenvalue > eps_rank * lambda_max.
CMatrix eigen_factor(const CMatrix& H, double eps_rank = 1e-10);

/// channel_covariance() with the factor replaced by the eigen factor, which
/// caps the rank at K when the profile has more taps than bins.
ChannelCovariance channel_covariance_eigen(const Pdp& pdp, const FrequencyGrid& grid, double eps_rank = 1e-10);

}  // namespace emitloc
