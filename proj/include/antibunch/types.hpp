#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace antibunch {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr Complex kI{0.0, 1.0};

/// Base for every error the library raises. Each subclass maps onto one
/// CLI exit code, so keep the hierarchy flat.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid inputs: broken type invariants, bad configs, out-of-bounds parameters.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Two emitters closer than the separation floor.
class CoincidentPointsError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Numerical failures that require a different route (quadrature kernel,
/// finer grid, other parameters).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class NearDefectiveError : public NumericalError {
 public:
  NearDefectiveError(const std::string& what, double condition)
      : NumericalError(what), condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

class SingularKernelError : public NumericalError {
 public:
  SingularKernelError(const std::string& what, double condition)
      : NumericalError(what), condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

class QuadratureError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// The single-photon (linear) amplitude vanishes, so the normalized g2 is undefined.
class LinearAmplitudeZeroError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class GridTooCoarseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Frobenius-norm relative difference, guarded against a zero reference.
inline double relative_difference(const CMatrix& a, const CMatrix& reference) {
  const double denom = reference.norm();
  const double diff = (a - reference).norm();
  return denom > 0.0 ? diff / denom : diff;
}

}  // namespace antibunch
