#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "emitloc/channel.hpp"
#include "emitloc/scenario.hpp"
#include "emitloc/signal.hpp"
#include "emitloc/types.hpp"

namespace emitloc {

// Covariance of y_m given (q, x) under the Gaussian channel model:
//   R = X G H G^H X^H + sigma^2 I,
// X the K*D x K stack of per-window diagonals of x, G = diag(g(tau_m0(q))).

CMatrix covariance_R(const TransmitSignal& x, const ChannelCovariance& cov, const Position& q,
                     const Position& station, const FrequencyGrid& grid, double noise_variance);

/// R^-1 through the Woodbury identity with the r x r core
/// I + sigma^-2 U^H X^H X U. Requires sigma^2 > 0.
CMatrix woodbury_inverse(const TransmitSignal& x, const ChannelCovariance& cov, const Position& q,
                         const Position& station, const FrequencyGrid& grid, double noise_variance);

/// ln|R| = ln|I + sigma^-2 U^H X^H X U| + K D ln(sigma^2).
double log_det_R(const TransmitSignal& x, const ChannelCovariance& cov, double noise_variance);

/// dR/dq_{x,y,z}. Throws SingularityError when q coincides with the station.
std::array<CMatrix, 3> dR_dq(const TransmitSignal& x, const ChannelCovariance& cov, const Position& q,
                             const Position& station, const FrequencyGrid& grid);

/// dR/d|x^d[k]|. Throws RangeError for k, d out of range.
CMatrix dR_dmag(const TransmitSignal& x, const ChannelCovariance& cov, const Position& q,
                const Position& station, const FrequencyGrid& grid, int k, int d);

/// dR/d angle(x^d[k]).
CMatrix dR_dphase(const TransmitSignal& x, const ChannelCovariance& cov, const Position& q,
                  const Position& station, const FrequencyGrid& grid, int k, int d);

struct FimOptions {
  bool known_magnitudes{false};
  // Phase entry treated as the gauge and left out; -1 means K*D - 1.
  int gauge_index{-1};
  unsigned threads{1};
};

/// Fisher information over [q_x, q_y, q_z, |x[0..KD-1]|, angle x[all but gauge]],
/// magnitudes omitted when known.
struct FimResult {
  RMatrix J;
  int K{0};
  int D{0};
  bool known_magnitudes{false};
  int gauge_index{0};

  int num_params() const { return static_cast<int>(J.rows()); }
  std::vector<std::string> labels() const;
};

/// J[u, v] = sum_m Tr{R_m^-1 dR_m/du R_m^-1 dR_m/dv}.
FimResult fim(const TransmitSignal& x, std::span<const ChannelCovariance> covs, const Scenario& scenario,
              const FrequencyGrid& grid, double noise_variance, const FimOptions& opts = {});

/// Removes the magnitude rows and columns from a full FIM.
FimResult known_magnitude_block(const FimResult& full);

/// Elementwise mean of FIMs with identical layout.
FimResult average_fim(std::span<const FimResult> fims);

struct CrlbResult {
  double sigma_q_sq{0.0};  // m^2
  RMatrix position_cov;    // 3x3, or 2x2 when planar
};

/// Position block of J^-1 (q_z dropped first when planar). Throws
/// RankDeficiencyError naming the dominant parameter of the null direction.
CrlbResult crlb_position(const FimResult& fim, bool planar);

}  // namespace emitloc
