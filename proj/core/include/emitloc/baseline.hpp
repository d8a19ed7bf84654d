#pragma once

#include <span>

#include "emitloc/estimator.hpp"
#include "emitloc/signal.hpp"

namespace emitloc {

/// Non-coherent cross-power TDOA surface used as a comparison floor:
///   score(q) = sum_{m<m'} | sum_{k,d} y_m^d[k] conj(y_m'^d[k]) exp(+j 2 pi f_k (tau_m0(q) - tau_m'0(q))) |.
class CrossPowerSurface {
 public:
  CrossPowerSurface(const ObservationSet& obs, std::span<const Position> stations);

  double score(const Position& q) const;
  RVector scores(const CandidateSet& candidates) const;

 private:
  FrequencyGrid grid_;
  std::vector<Position> stations_;
  std::vector<CVector> cross_;  // window-summed cross spectra, pair-major
};

/// Argmax of the cross-power surface (first maximum on ties).
Position baseline_estimate(const ObservationSet& obs, std::span<const Position> stations,
                           const CandidateSet& candidates);

}  // namespace emitloc
