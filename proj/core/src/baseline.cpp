#include "emitloc/baseline.hpp"

namespace emitloc {

CrossPowerSurface::CrossPowerSurface(const ObservationSet& obs, std::span<const Position> stations)
    : grid_(obs.grid), stations_(stations.begin(), stations.end()) {
  validate(obs, 2);
  if (stations.size() != obs.y.size()) throw ValidationError("baseline: need one position per station");
  const int K = obs.K();
  for (int m = 0; m < obs.M(); ++m)
    for (int n = m + 1; n < obs.M(); ++n) {
      CVector s = CVector::Zero(K);
      for (int d = 0; d < obs.D; ++d)
        s += obs.y[m].segment(K * d, K).cwiseProduct(obs.y[n].segment(K * d, K).conjugate());
      cross_.push_back(std::move(s));
    }
}

double CrossPowerSurface::score(const Position& q) const {
  const int M = static_cast<int>(stations_.size());
  std::vector<double> tau(M);
  for (int m = 0; m < M; ++m) tau[m] = toa(q, stations_[m]);
  double total = 0.0;
  std::size_t pair = 0;
  for (int m = 0; m < M; ++m)
    for (int n = m + 1; n < M; ++n, ++pair) {
      const double dt = tau[m] - tau[n];
      cplx acc{0.0, 0.0};
      const CVector& s = cross_[pair];
      for (int k = 0; k < grid_.K; ++k) acc += s[k] * std::polar(1.0, kTwoPi * grid_.frequency(k) * dt);
      total += std::abs(acc);
    }
  return total;
}

RVector CrossPowerSurface::scores(const CandidateSet& candidates) const {
  RVector out(static_cast<Eigen::Index>(candidates.positions.size()));
  for (std::size_t i = 0; i < candidates.positions.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = score(candidates.positions[i]);
  return out;
}

Position baseline_estimate(const ObservationSet& obs, std::span<const Position> stations,
                           const CandidateSet& candidates) {
  if (candidates.positions.empty()) throw ValidationError("baseline: empty candidate set");
  const CrossPowerSurface surface(obs, stations);
  return candidates.positions[argmax_first(surface.scores(candidates))];
}

}  // namespace emitloc
