#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "emitloc/channel.hpp"
#include "emitloc/gpm.hpp"
#include "emitloc/scenario.hpp"
#include "emitloc/signal.hpp"
#include "emitloc/types.hpp"

namespace emitloc {

/// Diagonal of the estimated magnitude matrix, one entry per k + K d.
struct MagnitudeEstimate {
  RVector values;
};

/// |x^d[k]| = sqrt( (1/M) sum_m |y_m^d[k]|^2 / H_m[k,k] ).
/// Throws DegenerateChannelError if some H_m[k,k] <= 0.
MagnitudeEstimate estimate_magnitudes(const ObservationSet& obs, std::span<const ChannelCovariance> covs);

struct CandidateSet {
  std::vector<Position> positions;
};

struct UsageResult {
  Position q_hat;
  std::size_t best_index{0};
  RVector costs;
  // Maximizing unit-modulus vector per candidate (this is gamma*, the
  // conjugate of the signal phases); filled only on request.
  std::vector<CVector> gammas;
};

struct UsageOptions {
  unsigned threads{1};
  bool keep_gammas{false};
};

/// Position-independent part of the USAGE cost for one observation set.
///
/// For each station it keeps P_m = U_m [I + sigma^-2 U_m^H S U_m]^{-1} U_m^H
/// where S = diag_k(sum_d gamma_hat[k + K d]^2) is the K x K magnitude energy
/// per bin; the bracket is factored by Cholesky. The cost matrix for a
/// hypothesis q is then
///   A[i, j] = sigma^-4 sum_m conj(c_m[i]) P_m[k_i, k_j] c_m[j],
///   c_m[i]  = conj(g_k(tau_m0(q))) y_m[i] gamma_hat[i],
/// which is the K*D x K*D expansion of Gamma Y^H G U B^-1 U^H G^H Y Gamma.
class UsageProblem {
 public:
  UsageProblem(const ObservationSet& obs, std::span<const ChannelCovariance> covs,
               std::span<const Position> stations, const MagnitudeEstimate& gamma_hat);

  /// A(q), Hermitian PSD by construction.
  CMatrix cost_matrix(const Position& q) const;

  /// max over the torus of (gamma*)^H A(q) gamma* via GPM.
  GpmResult solve(const Position& q, const GpmConfig& cfg) const;

  /// Costs for every candidate; gammas are stored if `gammas` is non-null.
  RVector evaluate(const CandidateSet& candidates, const GpmConfig& cfg, const UsageOptions& opts,
                   std::vector<CVector>* gammas = nullptr) const;

  int dimension() const { return K_ * D_; }

 private:
  FrequencyGrid grid_;
  int K_;
  int D_;
  double inv_sigma4_;
  std::vector<Position> stations_;
  std::vector<CMatrix> projector_;  // P_m, K x K
  std::vector<CVector> weighted_;   // y_m .* gamma_hat
};

/// A(q) for a single hypothesis, using obs.noise_variance as sigma_v^2.
/// Throws ValidationError when the noise variance is zero.
CMatrix cost_matrix_A(const ObservationSet& obs, std::span<const ChannelCovariance> covs,
                      std::span<const Position> stations, const Position& q, const MagnitudeEstimate& gamma_hat);

struct CostResult {
  double cost{0.0};
  CVector gamma;  // gamma*
};

CostResult cost_c1(const ObservationSet& obs, std::span<const ChannelCovariance> covs,
                   std::span<const Position> stations, const Position& q, const MagnitudeEstimate& gamma_hat,
                   const GpmConfig& cfg);

/// Grid argmax of C_1 (first maximum on ties). Known magnitudes, if given,
/// replace the estimate from estimate_magnitudes().
UsageResult usage_estimate(const ObservationSet& obs, std::span<const ChannelCovariance> covs,
                           std::span<const Position> stations, const CandidateSet& candidates,
                           const GpmConfig& cfg, const std::optional<RVector>& known_magnitudes = std::nullopt,
                           const UsageOptions& opts = {});

/// Index of the first maximum; throws ValidationError on an empty vector.
std::size_t argmax_first(const RVector& costs);

// ---------------------------------------------------------------------------
// Candidate grids.

/// Square planar grid of points (cx + i step, cy + j step) covering
/// [-half_extent, half_extent] around the center, at height z. Points are
/// ordered with x varying fastest.
CandidateSet planar_grid(double cx, double cy, double half_extent, double step, double z);

struct GridSearchConfig {
  double center_x{0.0};
  double center_y{0.0};
  double half_extent{30.0};
  double step{2.0};
  double z{0.0};
  // Each level searches a grid of step/refine_factor spanning one previous
  // step around the previous argmax. 0 levels = plain grid argmax.
  int refine_levels{2};
  int refine_factor{5};
};

void validate(const GridSearchConfig& cfg);

struct GridSearchResult {
  Position q_hat;
  CandidateSet coarse;
  RVector coarse_costs;
  std::size_t coarse_best{0};
};

using ScoreFunction = std::function<RVector(const CandidateSet&)>;

/// Coarse grid argmax followed by refine_levels local refinements.
GridSearchResult refined_grid_search(const GridSearchConfig& cfg, const ScoreFunction& score);

}  // namespace emitloc
