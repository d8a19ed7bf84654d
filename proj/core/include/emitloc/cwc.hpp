#pragma once

#include <optional>
#include <span>

#include "emitloc/estimator.hpp"
#include "emitloc/signal.hpp"

namespace emitloc {

/// Output of coherent window combining. `combined` is a D = 1 observation set
/// whose noise variance is D_original * sigma_v^2.
struct CwcResult {
  ObservationSet combined;
  RMatrix delta_phi;  // D_original x K; row 0 is zero
  int D_original{1};
};

/// Single forward pass: ybar^0 = y^0, then for d = 1..D-1
///   dphi^d[k] = angle( (1/M) sum_m y_m^d[k] conj(ybar_m^{d-1}[k]) )
///   ybar^d    = ybar^{d-1} + exp(-j dphi^d) .* y_m^d.
/// angle(0) is taken as 0.
CwcResult cwc_combine(const ObservationSet& obs);

/// Magnitudes of the combined signal when the per-window magnitudes are
/// known: |xbar[k]| = sum_d |x^d[k]|.
RVector combined_magnitudes(const RVector& window_magnitudes, int K, int D);

/// USAGE on the CWC output.
UsageResult usage_cwc_estimate(const ObservationSet& obs, std::span<const ChannelCovariance> covs,
                               std::span<const Position> stations, const CandidateSet& candidates,
                               const GpmConfig& cfg, const std::optional<RVector>& known_magnitudes = std::nullopt,
                               const UsageOptions& opts = {});

}  // namespace emitloc
