#include "emitloc/gpm.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace emitloc {

void validate(const GpmConfig& cfg) {
  if (!(cfg.beta > 0.0)) throw ConfigError("gpm: beta must be > 0");
  if (!(cfg.rel_tol > 0.0)) throw ConfigError("gpm: rel_tol must be > 0");
  if (cfg.max_iters < 1) throw ConfigError("gpm: max_iters must be >= 1");
  if (!(cfg.power_tol > 0.0) || cfg.power_max_iters < 1) throw ConfigError("gpm: invalid power iteration settings");
}

double quadratic_form(const CMatrix& A, const CVector& gamma) { return gamma.dot(A * gamma).real(); }

CVector leading_eigenvector(const CMatrix& A, double tol, int max_iters) {
  const Eigen::Index n = A.rows();
  CVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = std::polar(1.0, 0.618033988749895 * static_cast<double>(i * i + 1));
  v.normalize();
  CVector Av = A * v;
  double lambda = v.dot(Av).real();
  for (int it = 0; it < max_iters; ++it) {
    const double nrm = Av.norm();
    if (nrm == 0.0) return CVector::Zero(n);
    v = Av / nrm;
    Av.noalias() = A * v;
    const double next = v.dot(Av).real();
    const bool done = std::abs(next - lambda) <= tol * std::abs(next);
    lambda = next;
    if (done) break;
  }
  return v;
}

namespace {

void project_to_torus(const CVector& v, CVector& gamma) {
  for (Eigen::Index i = 0; i < v.size(); ++i) gamma[i] = unit_phasor(v[i]);
}

}  // namespace

GpmResult gpm_solve(const CMatrix& A, const GpmConfig& cfg) {
  validate(cfg);
  if (A.rows() != A.cols() || A.rows() == 0) throw ValidationError("gpm: A must be square and non-empty");
  const Eigen::Index n = A.rows();

  double shift = 0.0;
  if (cfg.validate_input) {
    const double a_norm = A.norm();
    if ((A - A.adjoint()).norm() > 1e-8 * a_norm) throw ValidationError("gpm: A is not Hermitian");
    Eigen::SelfAdjointEigenSolver<CMatrix> es(A, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    const double lmax = es.eigenvalues().maxCoeff();
    if (lmin < -1e-8 * std::abs(lmax)) throw ValidationError("gpm: A is not positive semi-definite");
    if (lmin < 0.0) shift = -lmin;
  }

  // Iterating on A + shift I (or the diagonal-free variant) leaves the
  // maximizer unchanged; `offset` maps the working cost back to A.
  const CMatrix* work = &A;
  CMatrix shifted;
  double offset = -shift * static_cast<double>(n);
  if (cfg.diagonal_shift) {
    shifted = A;
    shifted.diagonal().setZero();
    Eigen::SelfAdjointEigenSolver<CMatrix> es(shifted, Eigen::EigenvaluesOnly);
    const double s = std::max(0.0, -es.eigenvalues().minCoeff());
    shifted.diagonal().setConstant(s);
    offset = A.diagonal().real().sum() - s * static_cast<double>(n);
    work = &shifted;
  } else if (shift > 0.0) {
    shifted = A;
    shifted.diagonal().array() += shift;
    work = &shifted;
  }

  GpmResult res;
  res.gamma.resize(n);
  project_to_torus(leading_eigenvector(*work, cfg.power_tol, cfg.power_max_iters), res.gamma);

  CVector Ag = (*work) * res.gamma;
  double cost = res.gamma.dot(Ag).real();
  if (cfg.record_trace) res.trace.push_back(cost + offset);

  CVector v(n);
  for (int it = 1; it <= cfg.max_iters; ++it) {
    v = res.gamma + cfg.beta * Ag;
    project_to_torus(v, res.gamma);
    Ag.noalias() = (*work) * res.gamma;
    const double next = res.gamma.dot(Ag).real();
    res.iterations = it;
    const double change = std::abs(next - cost);
    cost = next;
    if (cfg.record_trace) res.trace.push_back(cost + offset);
    if (change <= cfg.rel_tol * std::abs(cost)) {
      res.converged = true;
      break;
    }
  }
  res.cost = cost + offset;
  return res;
}

}  // namespace emitloc
