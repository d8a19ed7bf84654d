#include "emitloc/crlb.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "emitloc/parallel.hpp"

namespace emitloc {

namespace {

void check_signal(const TransmitSignal& x, const ChannelCovariance& cov, const FrequencyGrid& grid) {
  if (x.K != grid.K || x.D < 1 || x.x.size() != x.K * x.D)
    throw ValidationError("crlb: signal dimensions do not match the frequency grid");
  if (cov.H.rows() != grid.K || cov.U.rows() != grid.K)
    throw ValidationError("crlb: channel covariance does not match K");
}

// G H G^H for the LOS delay of station m.
CMatrix delayed_covariance(const ChannelCovariance& cov, const Position& q, const Position& station,
                           const FrequencyGrid& grid) {
  const CVector g = steering_vector(toa(q, station), grid);
  return g.asDiagonal() * cov.H * g.conjugate().asDiagonal();
}

// S_c = Q_c + Q_c^H with Q_c = dG/dq_c H G^H = -j 2 pi u_c / c diag(f) Q.
std::array<CMatrix, 3> position_kernels(const CMatrix& Q, const Position& q, const Position& station,
                                        const FrequencyGrid& grid) {
  const Position diff = q - station;
  const double dist = norm(diff);
  if (!(dist > 0.0)) throw SingularityError("crlb: position derivative is singular at a station");
  const double u[3] = {diff.x / dist, diff.y / dist, diff.z / dist};
  const RVector f = grid.frequencies();
  std::array<CMatrix, 3> S;
  for (int c = 0; c < 3; ++c) {
    const cplx scale{0.0, -kTwoPi * u[c] / kSpeedOfLight};
    const CMatrix Qc = scale * (f.cast<cplx>().asDiagonal() * Q);
    S[c] = Qc + Qc.adjoint();
  }
  return S;
}

// X S X^H as a dense K*D x K*D matrix.
CMatrix expand(const TransmitSignal& x, const CMatrix& S) {
  const int N = x.K * x.D;
  CMatrix out(N, N);
  for (int j = 0; j < N; ++j) {
    const cplx xj = std::conj(x.x[j]);
    for (int i = 0; i < N; ++i) out(i, j) = x.x[i] * S(i % x.K, j % x.K) * xj;
  }
  return out;
}

// alpha e_i r^H + conj(alpha) r e_i^H.
CMatrix rank_two(int N, int i, cplx alpha, const CVector& r) {
  CMatrix out = CMatrix::Zero(N, N);
  out.row(i) += alpha * r.adjoint();
  out.col(i) += std::conj(alpha) * r;
  return out;
}

void check_index(const TransmitSignal& x, int k, int d) {
  if (k < 0 || k >= x.K || d < 0 || d >= x.D)
    throw RangeError("crlb: (k, d) = (" + std::to_string(k) + ", " + std::to_string(d) + ") out of range");
}

// Column k of V = X Q restricted to rows of window structure: V[i, k] = x_i Q[k_i, k].
CVector v_column(const TransmitSignal& x, const CMatrix& Q, int k) {
  const int N = x.K * x.D;
  CVector r(N);
  for (int i = 0; i < N; ++i) r[i] = x.x[i] * Q(i % x.K, k);
  return r;
}

CMatrix woodbury_core(const TransmitSignal& x, const ChannelCovariance& cov, double noise_variance) {
  RVector bin_energy = RVector::Zero(x.K);
  for (int i = 0; i < x.K * x.D; ++i) bin_energy[i % x.K] += std::norm(x.x[i]);
  CMatrix B = (1.0 / noise_variance) * (cov.U.adjoint() * bin_energy.asDiagonal() * cov.U);
  B.diagonal().array() += 1.0;
  return B;
}

}  // namespace

CMatrix covariance_R(const TransmitSignal& x, const ChannelCovariance& cov, const Position& q,
                     const Position& station, const FrequencyGrid& grid, double noise_variance) {
  check_signal(x, cov, grid);
  CMatrix R = expand(x, delayed_covariance(cov, q, station, grid));
  R.diagonal().array() += noise_variance;
  return R;
}

CMatrix woodbury_inverse(const TransmitSignal& x, const ChannelCovariance& cov, const Position& q,
                         const Position& station, const FrequencyGrid& grid, double noise_variance) {
  check_signal(x, cov, grid);
  if (!(noise_variance > 0.0)) throw SingularityError("crlb: R is singular for zero noise variance");
  const int N = x.K * x.D;
  const double inv_s2 = 1.0 / noise_variance;
  const CVector g = steering_vector(toa(q, station), grid);
  // F = X G U, row i = x_i g_{k_i} U[k_i, :].
  CMatrix F(N, cov.U.cols());
  for (int i = 0; i < N; ++i) F.row(i) = (x.x[i] * g[i % x.K]) * cov.U.row(i % x.K);
  Eigen::LLT<CMatrix> llt(woodbury_core(x, cov, noise_variance));
  if (llt.info() != Eigen::Success) throw SingularityError("crlb: Woodbury core is not positive definite");
  const CMatrix LinvFh = llt.matrixL().solve(F.adjoint());
  CMatrix W = -(inv_s2 * inv_s2) * (LinvFh.adjoint() * LinvFh);
  W.diagonal().array() += inv_s2;
  return W;
}

double log_det_R(const TransmitSignal& x, const ChannelCovariance& cov, double noise_variance) {
  if (!(noise_variance > 0.0)) throw SingularityError("crlb: R is singular for zero noise variance");
  Eigen::LLT<CMatrix> llt(woodbury_core(x, cov, noise_variance));
  if (llt.info() != Eigen::Success) throw SingularityError("crlb: Woodbury core is not positive definite");
  double logdet = 0.0;
  const CMatrix& L = llt.matrixLLT();
  for (Eigen::Index i = 0; i < L.rows(); ++i) logdet += 2.0 * std::log(L(i, i).real());
  return logdet + static_cast<double>(x.K * x.D) * std::log(noise_variance);
}

std::array<CMatrix, 3> dR_dq(const TransmitSignal& x, const ChannelCovariance& cov, const Position& q,
                             const Position& station, const FrequencyGrid& grid) {
  check_signal(x, cov, grid);
  const auto S = position_kernels(delayed_covariance(cov, q, station, grid), q, station, grid);
  return {expand(x, S[0]), expand(x, S[1]), expand(x, S[2])};
}

CMatrix dR_dmag(const TransmitSignal& x, const ChannelCovariance& cov, const Position& q,
                const Position& station, const FrequencyGrid& grid, int k, int d) {
  check_signal(x, cov, grid);
  check_index(x, k, d);
  const int i = k + x.K * d;
  const CMatrix Q = delayed_covariance(cov, q, station, grid);
  return rank_two(x.K * x.D, i, unit_phasor(x.x[i]), v_column(x, Q, k));
}

CMatrix dR_dphase(const TransmitSignal& x, const ChannelCovariance& cov, const Position& q,
                  const Position& station, const FrequencyGrid& grid, int k, int d) {
  check_signal(x, cov, grid);
  check_index(x, k, d);
  const int i = k + x.K * d;
  const CMatrix Q = delayed_covariance(cov, q, station, grid);
  return rank_two(x.K * x.D, i, cplx{0.0, 1.0} * x.x[i], v_column(x, Q, k));
}

std::vector<std::string> FimResult::labels() const {
  std::vector<std::string> out = {"q_x", "q_y", "q_z"};
  const int N = K * D;
  if (!known_magnitudes)
    for (int i = 0; i < N; ++i) out.push_back("|x[" + std::to_string(i) + "]|");
  for (int i = 0; i < N; ++i)
    if (i != gauge_index) out.push_back("arg x[" + std::to_string(i) + "]");
  return out;
}

namespace {

// Contribution of one station to the full FIM (magnitudes included).
//
// Every signal derivative is rank two, D_u = a e_u r^H + conj(a) r e_u^H with
// r = (X Q)[:, k_u], so traces against R^-1 reduce to entries of R^-1,
// R^-1 V and V^H R^-1 V. Position derivatives are X S_c X^H, which reduce to
// K x K products with N = X^H R^-1 X.
RMatrix station_fim(const TransmitSignal& x, const ChannelCovariance& cov, const Position& q,
                    const Position& station, const FrequencyGrid& grid, double noise_variance, int gauge) {
  const int K = x.K;
  const int N = x.K * x.D;
  const int P = 3 + N + (N - 1);
  const CMatrix Q = delayed_covariance(cov, q, station, grid);
  const auto S = position_kernels(Q, q, station, grid);
  const CMatrix W = woodbury_inverse(x, cov, q, station, grid, noise_variance);

  CMatrix V(N, K);
  for (int i = 0; i < N; ++i) V.row(i) = x.x[i] * Q.row(i % K);
  CMatrix WX = CMatrix::Zero(N, K);
  for (int i = 0; i < N; ++i) WX.col(i % K) += W.col(i) * x.x[i];
  const CMatrix WV = W * V;
  const CMatrix VWV = V.adjoint() * WV;
  CMatrix XWX = CMatrix::Zero(K, K);  // X^H W X
  for (int i = 0; i < N; ++i) XWX.row(i % K) += std::conj(x.x[i]) * WX.row(i);
  const CMatrix XWV = WX.adjoint() * V;  // X^H W V

  RMatrix J = RMatrix::Zero(P, P);

  std::array<CMatrix, 3> T;
  for (int c = 0; c < 3; ++c) T[c] = WX * (S[c] * XWV);
  for (int a = 0; a < 3; ++a)
    for (int b = a; b < 3; ++b) {
      J(a, b) = (XWX * S[a] * XWX * S[b]).trace().real();
      J(b, a) = J(a, b);
    }

  // Signal parameters in layout order: magnitudes, then phases without the gauge.
  struct Param {
    int i;
    cplx alpha;
  };
  std::vector<Param> params;
  params.reserve(2 * N - 1);
  for (int i = 0; i < N; ++i) params.push_back({i, unit_phasor(x.x[i])});
  for (int i = 0; i < N; ++i)
    if (i != gauge) params.push_back({i, cplx{0.0, 1.0} * x.x[i]});

  for (std::size_t u = 0; u < params.size(); ++u) {
    const int iu = params[u].i;
    const int ku = iu % K;
    const cplx au = params[u].alpha;
    const int row = 3 + static_cast<int>(u);
    for (int c = 0; c < 3; ++c) {
      J(c, row) = 2.0 * (std::conj(au) * T[c](iu, ku)).real();
      J(row, c) = J(c, row);
    }
    for (std::size_t v = u; v < params.size(); ++v) {
      const int iv = params[v].i;
      const int kv = iv % K;
      const cplx av = params[v].alpha;
      const cplx t1 = au * av * std::conj(WV(iv, ku)) * std::conj(WV(iu, kv));
      const cplx t2 = au * std::conj(av) * VWV(ku, kv) * W(iv, iu);
      const int col = 3 + static_cast<int>(v);
      J(row, col) = 2.0 * (t1 + t2).real();
      J(col, row) = J(row, col);
    }
  }
  return J;
}

RMatrix drop_rows_cols(const RMatrix& J, const std::vector<int>& keep) {
  const int n = static_cast<int>(keep.size());
  RMatrix out(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) out(a, b) = J(keep[a], keep[b]);
  return out;
}

}  // namespace

FimResult fim(const TransmitSignal& x, std::span<const ChannelCovariance> covs, const Scenario& scenario,
              const FrequencyGrid& grid, double noise_variance, const FimOptions& opts) {
  if (covs.size() != scenario.stations.size()) throw ValidationError("fim: need one covariance per station");
  if (!(noise_variance > 0.0)) throw SingularityError("fim: R is singular for zero noise variance");
  const int N = x.K * x.D;
  const int gauge = opts.gauge_index < 0 ? N - 1 : opts.gauge_index;
  if (gauge >= N) throw RangeError("fim: gauge index out of range");
  for (const auto& c : covs) check_signal(x, c, grid);

  std::vector<RMatrix> parts(covs.size());
  parallel_for(covs.size(), opts.threads, [&](std::size_t m) {
    parts[m] = station_fim(x, covs[m], scenario.emitter, scenario.stations[m], grid, noise_variance, gauge);
  });

  FimResult res;
  res.K = x.K;
  res.D = x.D;
  res.gauge_index = gauge;
  res.J = RMatrix::Zero(3 + 2 * N - 1, 3 + 2 * N - 1);
  for (const auto& p : parts) res.J += p;
  return opts.known_magnitudes ? known_magnitude_block(res) : res;
}

FimResult known_magnitude_block(const FimResult& full) {
  if (full.known_magnitudes) return full;
  const int N = full.K * full.D;
  std::vector<int> keep = {0, 1, 2};
  for (int p = 3 + N; p < full.num_params(); ++p) keep.push_back(p);
  FimResult out = full;
  out.known_magnitudes = true;
  out.J = drop_rows_cols(full.J, keep);
  return out;
}

FimResult average_fim(std::span<const FimResult> fims) {
  if (fims.empty()) throw ValidationError("average_fim: nothing to average");
  FimResult out = fims.front();
  for (std::size_t i = 1; i < fims.size(); ++i) {
    if (fims[i].J.rows() != out.J.rows() || fims[i].known_magnitudes != out.known_magnitudes)
      throw ValidationError("average_fim: layouts differ");
    out.J += fims[i].J;
  }
  out.J /= static_cast<double>(fims.size());
  return out;
}

CrlbResult crlb_position(const FimResult& fim, bool planar) {
  const int P = fim.num_params();
  std::vector<int> keep;
  for (int p = 0; p < P; ++p)
    if (!(planar && p == 2)) keep.push_back(p);
  const RMatrix J = drop_rows_cols(fim.J, keep);
  const auto labels = fim.labels();
  const int n = static_cast<int>(keep.size());

  // Jacobi scaling so parameters with different units compare.
  RVector scale(n);
  const double dmax = J.diagonal().cwiseAbs().maxCoeff();
  for (int a = 0; a < n; ++a) {
    const double d = J(a, a);
    if (!(d > 1e-300) || !(d > 1e-14 * dmax)) {
      const std::string name = labels[keep[a]];
      throw RankDeficiencyError("crlb: Fisher information is singular along " + name, name);
    }
    scale[a] = 1.0 / std::sqrt(d);
  }
  const RMatrix Js = scale.asDiagonal() * J * scale.asDiagonal();
  Eigen::SelfAdjointEigenSolver<RMatrix> es(Js);
  const RVector& lambda = es.eigenvalues();
  if (!(lambda[0] > 1e-13 * lambda[n - 1])) {
    Eigen::Index dominant = 0;
    es.eigenvectors().col(0).cwiseAbs().maxCoeff(&dominant);
    const std::string name = labels[keep[dominant]];
    throw RankDeficiencyError("crlb: Fisher information is singular along " + name, name);
  }
  const int npos = planar ? 2 : 3;
  // Position block of J^-1 = D V Lambda^-1 V^T D restricted to the first rows.
  const RMatrix Vp = scale.head(npos).asDiagonal() * es.eigenvectors().topRows(npos);
  CrlbResult res;
  res.position_cov = Vp * lambda.cwiseInverse().asDiagonal() * Vp.transpose();
  res.sigma_q_sq = res.position_cov.trace();
  return res;
}

}  // namespace emitloc
