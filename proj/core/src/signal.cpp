#include "emitloc/signal.hpp"

#include <cmath>
#include <string>

namespace emitloc {

void validate(const ObservationSet& obs, int min_stations) {
  validate(obs.grid);
  if (obs.D < 1) throw ValidationError("observations: D must be >= 1");
  if (obs.M() < min_stations)
    throw ValidationError("observations: need at least " + std::to_string(min_stations) + " stations");
  if (!(obs.noise_variance >= 0.0)) throw ValidationError("observations: noise variance must be >= 0");
  for (const auto& ym : obs.y)
    if (ym.size() != obs.length()) throw ValidationError("observations: every station needs K*D samples");
}

TransmitSignal gen_white(int K, int D, Rng& rng) {
  if (K < 1 || D < 1) throw ConfigError("gen_white: K and D must be >= 1");
  TransmitSignal s{CVector(K * D), K, D};
  for (int i = 0; i < K * D; ++i) s.x[i] = complex_gaussian(rng, 1.0);
  return s;
}

TransmitSignal gen_flat_psk(int K, int D, int order, Rng& rng) {
  if (K < 1 || D < 1) throw ConfigError("gen_flat_psk: K and D must be >= 1");
  if (order < 2 || (order & (order - 1)) != 0) throw ConfigError("gen_flat_psk: order must be a power of two >= 2");
  std::uniform_int_distribution<int> symbol(0, order - 1);
  TransmitSignal s{CVector(K * D), K, D};
  for (int i = 0; i < K * D; ++i) {
    const int n = symbol(rng);
    // Exact values on the real axis keep BPSK at precisely +-1.
    if (2 * n == order) {
      s.x[i] = {-1.0, 0.0};
    } else if (n == 0) {
      s.x[i] = {1.0, 0.0};
    } else {
      s.x[i] = std::polar(1.0, kTwoPi * n / order);
    }
  }
  return s;
}

CVector channel_response(const ChannelRealization& ch, const FrequencyGrid& grid) {
  CVector h = CVector::Zero(grid.K);
  for (const auto& tap : ch.taps) {
    if (tap.gain == cplx{0.0, 0.0}) continue;
    for (int k = 0; k < grid.K; ++k) h[k] += tap.gain * std::polar(1.0, -kTwoPi * grid.frequency(k) * tap.delay);
  }
  return h;
}

ObservationSet synthesize_observations(const Scenario& scenario, std::span<const ChannelRealization> channels,
                                       const TransmitSignal& x, const FrequencyGrid& grid,
                                       double noise_variance, Rng& rng) {
  validate(grid);
  if (channels.size() != scenario.stations.size())
    throw ValidationError("synthesize: need one channel realization per station");
  if (x.K != grid.K || x.D < 1 || x.x.size() != x.K * x.D)
    throw ValidationError("synthesize: signal dimensions do not match the frequency grid");
  if (!(noise_variance >= 0.0)) throw ValidationError("synthesize: noise variance must be >= 0");

  ObservationSet obs;
  obs.grid = grid;
  obs.D = x.D;
  obs.noise_variance = noise_variance;
  obs.y.reserve(scenario.stations.size());
  const int K = grid.K;
  for (std::size_t m = 0; m < scenario.stations.size(); ++m) {
    const CVector transfer =
        steering_vector(toa(scenario.emitter, scenario.stations[m]), grid).cwiseProduct(channel_response(channels[m], grid));
    CVector ym(K * x.D);
    for (int d = 0; d < x.D; ++d)
      for (int k = 0; k < K; ++k) {
        const int i = k + K * d;
        ym[i] = x.x[i] * transfer[k] + complex_gaussian(rng, noise_variance);
      }
    obs.y.push_back(std::move(ym));
  }
  return obs;
}

double noise_variance_for_snr(const TransmitSignal& x, double pdp_total_power, double snr_db) {
  const double mean_power = x.x.size() > 0 ? x.x.squaredNorm() / static_cast<double>(x.x.size()) : 0.0;
  if (!(mean_power > 0.0)) throw ValidationError("noise_variance_for_snr: signal has zero power");
  if (!(pdp_total_power > 0.0)) throw ValidationError("noise_variance_for_snr: channel has zero power");
  return mean_power * pdp_total_power / std::pow(10.0, snr_db / 10.0);
}

}  // namespace emitloc
