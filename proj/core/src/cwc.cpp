#include "emitloc/cwc.hpp"

namespace emitloc {

CwcResult cwc_combine(const ObservationSet& obs) {
  validate(obs, 1);
  const int K = obs.K();
  const int D = obs.D;
  const int M = obs.M();

  CwcResult res;
  res.D_original = D;
  res.delta_phi = RMatrix::Zero(D, K);
  res.combined.grid = obs.grid;
  res.combined.D = 1;
  res.combined.noise_variance = static_cast<double>(D) * obs.noise_variance;
  res.combined.y.reserve(M);
  for (int m = 0; m < M; ++m) res.combined.y.push_back(obs.y[m].head(K));

  auto& ybar = res.combined.y;
  for (int d = 1; d < D; ++d) {
    for (int k = 0; k < K; ++k) {
      cplx corr{0.0, 0.0};
      for (int m = 0; m < M; ++m) corr += obs.y[m][k + K * d] * std::conj(ybar[m][k]);
      corr /= static_cast<double>(M);
      const double phi = safe_arg(corr);
      res.delta_phi(d, k) = phi;
      const cplx rot = std::polar(1.0, -phi);
      for (int m = 0; m < M; ++m) ybar[m][k] += rot * obs.y[m][k + K * d];
    }
  }
  return res;
}

RVector combined_magnitudes(const RVector& window_magnitudes, int K, int D) {
  if (window_magnitudes.size() != K * D) throw ValidationError("combined_magnitudes: length must be K*D");
  RVector out = RVector::Zero(K);
  for (int d = 0; d < D; ++d) out += window_magnitudes.segment(K * d, K);
  return out;
}

UsageResult usage_cwc_estimate(const ObservationSet& obs, std::span<const ChannelCovariance> covs,
                               std::span<const Position> stations, const CandidateSet& candidates,
                               const GpmConfig& cfg, const std::optional<RVector>& known_magnitudes,
                               const UsageOptions& opts) {
  const CwcResult cwc = cwc_combine(obs);
  std::optional<RVector> combined_known;
  if (known_magnitudes) combined_known = combined_magnitudes(*known_magnitudes, obs.K(), obs.D);
  return usage_estimate(cwc.combined, covs, stations, candidates, cfg, combined_known, opts);
}

}  // namespace emitloc
