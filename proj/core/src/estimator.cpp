#include "emitloc/estimator.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "emitloc/parallel.hpp"

namespace emitloc {

namespace {

void check_inputs(const ObservationSet& obs, std::span<const ChannelCovariance> covs,
                  std::span<const Position> stations) {
  validate(obs, 1);
  if (covs.size() != obs.y.size()) throw ValidationError("estimator: need one channel covariance per station");
  if (stations.size() != obs.y.size()) throw ValidationError("estimator: need one position per station");
  for (const auto& c : covs) {
    if (c.H.rows() != obs.K() || c.H.cols() != obs.K() || c.U.rows() != obs.K())
      throw ValidationError("estimator: channel covariance does not match K");
  }
}

}  // namespace

MagnitudeEstimate estimate_magnitudes(const ObservationSet& obs, std::span<const ChannelCovariance> covs) {
  validate(obs, 1);
  if (covs.size() != obs.y.size()) throw ValidationError("estimate_magnitudes: need one covariance per station");
  const int K = obs.K();
  const int N = obs.length();
  RVector energy = RVector::Zero(N);
  for (int m = 0; m < obs.M(); ++m) {
    const auto& H = covs[m].H;
    if (H.rows() != K) throw ValidationError("estimate_magnitudes: covariance does not match K");
    for (int k = 0; k < K; ++k) {
      const double hkk = H(k, k).real();
      if (!(hkk > 0.0))
        throw DegenerateChannelError("estimate_magnitudes: H_" + std::to_string(m) + "[" + std::to_string(k) +
                                     "," + std::to_string(k) + "] is not positive");
      for (int d = 0; d < obs.D; ++d) energy[k + K * d] += std::norm(obs.y[m][k + K * d]) / hkk;
    }
  }
  MagnitudeEstimate est;
  est.values = (energy / static_cast<double>(obs.M())).cwiseSqrt();
  return est;
}

UsageProblem::UsageProblem(const ObservationSet& obs, std::span<const ChannelCovariance> covs,
                           std::span<const Position> stations, const MagnitudeEstimate& gamma_hat)
    : grid_(obs.grid), K_(obs.K()), D_(obs.D), stations_(stations.begin(), stations.end()) {
  check_inputs(obs, covs, stations);
  if (!(obs.noise_variance > 0.0)) throw ValidationError("usage: noise variance must be > 0");
  if (gamma_hat.values.size() != obs.length())
    throw ValidationError("usage: magnitude estimate length must be K*D");
  if ((gamma_hat.values.array() < 0.0).any()) throw ValidationError("usage: magnitudes must be >= 0");

  const double inv_sigma2 = 1.0 / obs.noise_variance;
  inv_sigma4_ = inv_sigma2 * inv_sigma2;

  // Magnitude energy per bin, i.e. the diagonal of X^H X.
  RVector bin_energy = RVector::Zero(K_);
  for (int d = 0; d < D_; ++d)
    for (int k = 0; k < K_; ++k) bin_energy[k] += gamma_hat.values[k + K_ * d] * gamma_hat.values[k + K_ * d];

  projector_.reserve(covs.size());
  weighted_.reserve(covs.size());
  for (std::size_t m = 0; m < covs.size(); ++m) {
    const CMatrix& U = covs[m].U;
    const Eigen::Index r = U.cols();
    if (r == 0) {
      projector_.push_back(CMatrix::Zero(K_, K_));
    } else {
      CMatrix bracket = inv_sigma2 * (U.adjoint() * bin_energy.asDiagonal() * U);
      bracket.diagonal().array() += 1.0;
      Eigen::LLT<CMatrix> llt(bracket);
      if (llt.info() != Eigen::Success) throw ValidationError("usage: bracket matrix is not positive definite");
      // P = U B^-1 U^H = (L^-1 U^H)^H (L^-1 U^H).
      const CMatrix W = llt.matrixL().solve(U.adjoint());
      projector_.push_back(W.adjoint() * W);
    }
    weighted_.push_back(obs.y[m].cwiseProduct(gamma_hat.values.cast<cplx>()));
  }
}

CMatrix UsageProblem::cost_matrix(const Position& q) const {
  const int N = K_ * D_;
  CMatrix A = CMatrix::Zero(N, N);
  CVector c(N);
  for (std::size_t m = 0; m < stations_.size(); ++m) {
    const CVector g = steering_vector(toa(q, stations_[m]), grid_);
    for (int d = 0; d < D_; ++d)
      for (int k = 0; k < K_; ++k) c[k + K_ * d] = std::conj(g[k]) * weighted_[m][k + K_ * d];
    const CMatrix& P = projector_[m];
    for (int j = 0; j < N; ++j) {
      const int kj = j % K_;
      const cplx cj = c[j];
      for (int i = 0; i < N; ++i) A(i, j) += std::conj(c[i]) * P(i % K_, kj) * cj;
    }
  }
  A *= inv_sigma4_;
  return A;
}

GpmResult UsageProblem::solve(const Position& q, const GpmConfig& cfg) const {
  GpmConfig local = cfg;
  local.validate_input = false;  // A = Z^H Z by construction
  return gpm_solve(cost_matrix(q), local);
}

RVector UsageProblem::evaluate(const CandidateSet& candidates, const GpmConfig& cfg, const UsageOptions& opts,
                               std::vector<CVector>* gammas) const {
  const std::size_t n = candidates.positions.size();
  RVector costs(static_cast<Eigen::Index>(n));
  if (gammas) gammas->assign(n, CVector());
  parallel_for(n, opts.threads, [&](std::size_t i) {
    GpmResult r = solve(candidates.positions[i], cfg);
    costs[static_cast<Eigen::Index>(i)] = r.cost;
    if (gammas) (*gammas)[i] = std::move(r.gamma);
  });
  return costs;
}

CMatrix cost_matrix_A(const ObservationSet& obs, std::span<const ChannelCovariance> covs,
                      std::span<const Position> stations, const Position& q, const MagnitudeEstimate& gamma_hat) {
  return UsageProblem(obs, covs, stations, gamma_hat).cost_matrix(q);
}

CostResult cost_c1(const ObservationSet& obs, std::span<const ChannelCovariance> covs,
                   std::span<const Position> stations, const Position& q, const MagnitudeEstimate& gamma_hat,
                   const GpmConfig& cfg) {
  GpmResult r = UsageProblem(obs, covs, stations, gamma_hat).solve(q, cfg);
  return {r.cost, std::move(r.gamma)};
}

std::size_t argmax_first(const RVector& costs) {
  if (costs.size() == 0) throw ValidationError("argmax over an empty set");
  std::size_t best = 0;
  for (Eigen::Index i = 1; i < costs.size(); ++i)
    if (costs[i] > costs[static_cast<Eigen::Index>(best)]) best = static_cast<std::size_t>(i);
  return best;
}

UsageResult usage_estimate(const ObservationSet& obs, std::span<const ChannelCovariance> covs,
                           std::span<const Position> stations, const CandidateSet& candidates,
                           const GpmConfig& cfg, const std::optional<RVector>& known_magnitudes,
                           const UsageOptions& opts) {
  if (candidates.positions.empty()) throw ValidationError("usage_estimate: empty candidate set");
  MagnitudeEstimate gamma_hat;
  if (known_magnitudes) {
    gamma_hat.values = *known_magnitudes;
  } else {
    gamma_hat = estimate_magnitudes(obs, covs);
  }
  const UsageProblem problem(obs, covs, stations, gamma_hat);
  UsageResult res;
  res.costs = problem.evaluate(candidates, cfg, opts, opts.keep_gammas ? &res.gammas : nullptr);
  res.best_index = argmax_first(res.costs);
  res.q_hat = candidates.positions[res.best_index];
  return res;
}

CandidateSet planar_grid(double cx, double cy, double half_extent, double step, double z) {
  if (!(step > 0.0) || !(half_extent >= 0.0)) throw ConfigError("planar_grid: need step > 0, half_extent >= 0");
  const int n = static_cast<int>(std::floor(2.0 * half_extent / step + 1e-9)) + 1;
  const double start = -0.5 * (n - 1) * step;
  CandidateSet set;
  set.positions.reserve(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) set.positions.push_back({cx + start + i * step, cy + start + j * step, z});
  return set;
}

void validate(const GridSearchConfig& cfg) {
  if (!(cfg.step > 0.0)) throw ConfigError("grid: step must be > 0");
  if (!(cfg.half_extent >= 0.0)) throw ConfigError("grid: extent must be >= 0");
  if (cfg.refine_levels < 0) throw ConfigError("grid: refine_levels must be >= 0");
  if (cfg.refine_factor < 2) throw ConfigError("grid: refine_factor must be >= 2");
}

GridSearchResult refined_grid_search(const GridSearchConfig& cfg, const ScoreFunction& score) {
  validate(cfg);
  GridSearchResult res;
  res.coarse = planar_grid(cfg.center_x, cfg.center_y, cfg.half_extent, cfg.step, cfg.z);
  res.coarse_costs = score(res.coarse);
  res.coarse_best = argmax_first(res.coarse_costs);
  res.q_hat = res.coarse.positions[res.coarse_best];

  double step = cfg.step;
  for (int level = 0; level < cfg.refine_levels; ++level) {
    const double fine = step / cfg.refine_factor;
    const CandidateSet local = planar_grid(res.q_hat.x, res.q_hat.y, step, fine, cfg.z);
    const RVector costs = score(local);
    res.q_hat = local.positions[argmax_first(costs)];
    step = fine;
  }
  return res;
}

}  // namespace emitloc
