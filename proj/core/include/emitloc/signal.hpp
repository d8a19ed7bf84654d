#pragma once

#include <span>
#include <vector>

#include "emitloc/channel.hpp"
#include "emitloc/random.hpp"
#include "emitloc/scenario.hpp"
#include "emitloc/types.hpp"

namespace emitloc {

/// Transmit DFT coefficients of D windows, window-major: x[k + K d].
struct TransmitSignal {
  CVector x;
  int K{0};
  int D{0};

  cplx at(int k, int d) const { return x[k + K * d]; }
  RVector magnitudes() const { return x.cwiseAbs(); }
};

/// Received DFT coefficients y_m[k + K d] at every station.
struct ObservationSet {
  std::vector<CVector> y;
  FrequencyGrid grid;
  int D{1};
  double noise_variance{0.0};

  int M() const { return static_cast<int>(y.size()); }
  int K() const { return grid.K; }
  int length() const { return grid.K * D; }
};

/// Checks equal lengths K * D, D >= 1, sigma_v^2 >= 0 and at least
/// `min_stations` stations.
void validate(const ObservationSet& obs, int min_stations = 2);

/// i.i.d. CN(0, 1) entries.
TransmitSignal gen_white(int K, int D, Rng& rng);

/// Unit-magnitude PSK symbols, phase uniform over {2 pi n / order}.
TransmitSignal gen_flat_psk(int K, int D, int order, Rng& rng);

/// Frequency-domain received samples for every station:
/// y_m^d[k] = x^d[k] g_k(tau_m0) sum_l a_l exp(-j 2 pi f_k tau'_l) + v.
/// The channel response is the same in every window. Noise is drawn for
/// every sample (also when the variance is zero) so the stream layout is
/// independent of the noise level.
ObservationSet synthesize_observations(const Scenario& scenario, std::span<const ChannelRealization> channels,
                                       const TransmitSignal& x, const FrequencyGrid& grid,
                                       double noise_variance, Rng& rng);

/// Frequency response sum_l a_l exp(-j 2 pi f_k tau_l) of a realization.
CVector channel_response(const ChannelRealization& ch, const FrequencyGrid& grid);

/// sigma_v^2 = mean|x|^2 * P_h / 10^(snr_db / 10). P_h is the total profile
/// power, so the ratio of average received signal power to noise power per
/// frequency sample equals the requested SNR.
double noise_variance_for_snr(const TransmitSignal& x, double pdp_total_power, double snr_db);

}  // namespace emitloc
