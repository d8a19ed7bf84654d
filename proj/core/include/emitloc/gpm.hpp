#pragma once

#include <vector>

#include "emitloc/types.hpp"

namespace emitloc {

struct GpmConfig {
  double beta{300.0};
  double rel_tol{1e-9};
  int max_iters{10'000};
  // Leading-eigenvector power iteration used for the starting point.
  double power_tol{1e-8};
  int power_max_iters{1'000};
  // Hermitian/PSD check of the input. Callers that build A as B^H B by
  // construction switch it off; it costs a full eigendecomposition.
  bool validate_input{true};
  // Iterate on A - diag(A) + s I, s the smallest shift keeping it PSD. On the
  // torus this differs from the original cost by a constant, so the maximizers
  // are the same, but a heavy diagonal no longer damps each update.
  bool diagonal_shift{true};
  bool record_trace{false};
};

void validate(const GpmConfig& cfg);

struct GpmResult {
  CVector gamma;  // unit modulus
  double cost{0.0};
  int iterations{0};
  bool converged{false};
  std::vector<double> trace;  // cost per iterate when record_trace is set
};

/// Quadratic form gamma^H A gamma (real part).
double quadratic_form(const CMatrix& A, const CVector& gamma);

/// Leading eigenvector of a Hermitian PSD matrix by power iteration from a
/// fixed deterministic start. Returns the zero vector for A == 0.
CVector leading_eigenvector(const CMatrix& A, double tol, int max_iters);

/// Maximizes gamma^H A gamma over the unit-modulus torus with the generalized
/// power method: gamma <- exp(j angle((I + beta A) gamma)), started from the
/// phases of the leading eigenvector, stopping on a relative cost change below
/// rel_tol or after max_iters. A zero entry of the iterate gets phase 0.
GpmResult gpm_solve(const CMatrix& A, const GpmConfig& cfg = {});

}  // namespace emitloc
