#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace emitloc {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Error hierarchy. Everything derives from std::runtime_error so callers can
// catch broadly; the CLI maps the concrete type to an exit message.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RangeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateChannelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SingularityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RankDeficiencyError : std::runtime_error {
  RankDeficiencyError(const std::string& what, std::string direction)
      : std::runtime_error(what), null_direction(std::move(direction)) {}
  std::string null_direction;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Phase of a complex number with angle(0) == 0.
inline double safe_arg(cplx z) { return z == cplx{0.0, 0.0} ? 0.0 : std::arg(z); }

// exp(j*angle(z)) with the zero entry mapped to 1.
inline cplx unit_phasor(cplx z) {
  const double a = std::abs(z);
  return a == 0.0 ? cplx{1.0, 0.0} : z / a;
}

}  // namespace emitloc
