#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include <fmt/format.h>

#include "antibunch/environment.hpp"
#include "antibunch/types.hpp"

namespace antibunch {

/// Eigenvector-matrix condition number above which the Hamiltonian is treated
/// as defective (exceptional point proximity).
inline constexpr double kDefectiveCondition = 1e8;

/// Biorthogonal eigen-expansion of a non-Hermitian Hamiltonian.
///
/// Columns of `right` are right eigenvectors, rows of `left` the dual left
/// eigenvectors (left * right == identity). `residues[nu]` is the rank-one
/// matrix right.col(nu) * left.row(nu). States are ordered by ascending decay
/// rate -2 Im E, so index 0 is the longest-lived state.
struct SpectralData {
  CVector eigenvalues;
  CMatrix right;
  CMatrix left;
  std::vector<CMatrix> residues;
  double condition_estimate = 1.0;

  Eigen::Index size() const { return eigenvalues.size(); }
  double decay_rate(Eigen::Index nu) const { return -2.0 * eigenvalues(nu).imag(); }

  double min_decay_rate() const {
    double best = INFINITY;
    for (Eigen::Index nu = 0; nu < size(); ++nu) best = std::min(best, decay_rate(nu));
    return best;
  }

  double biorthogonality_error() const {
    const auto n = size();
    return (left * right - CMatrix::Identity(n, n)).norm();
  }

  double completeness_error() const {
    const auto n = size();
    CMatrix sum = CMatrix::Zero(n, n);
    for (const auto& g : residues) sum += g;
    return (sum - CMatrix::Identity(n, n)).norm();
  }

  double reconstruction_error(const CMatrix& h) const {
    CMatrix sum = CMatrix::Zero(h.rows(), h.cols());
    for (Eigen::Index nu = 0; nu < size(); ++nu) sum += eigenvalues(nu) * residues[nu];
    return relative_difference(sum, h);
  }
};

namespace detail {

// Gauge: unit norm, largest-magnitude component real and positive. Near-ties
// resolve to the lowest index so the choice is platform independent.
inline void fix_gauge(Eigen::Ref<CVector> v) {
  v.normalize();
  double largest = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) largest = std::max(largest, std::abs(v(i)));
  Eigen::Index pivot = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) >= largest * (1.0 - 1e-9)) {
      pivot = i;
      break;
    }
  }
  v *= std::abs(v(pivot)) / v(pivot);
}

inline double condition_number(const CMatrix& m) {
  Eigen::JacobiSVD<CMatrix> svd(m);
  const auto& s = svd.singularValues();
  const double smallest = s(s.size() - 1);
  return smallest > 0.0 ? s(0) / smallest : INFINITY;
}

}  // namespace detail

/// Diagonalizes a general complex matrix into the biorthogonal form above.
/// Throws NearDefectiveError when the eigenvectors are close to collapsing.
inline SpectralData eigendecompose(const CMatrix& h) {
  const auto n = h.rows();
  Eigen::ComplexEigenSolver<CMatrix> solver(h, true);
  if (solver.info() != Eigen::Success) throw NumericalError("eigensolver did not converge");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const CVector& raw = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    const double da = -2.0 * raw(a).imag();
    const double db = -2.0 * raw(b).imag();
    if (std::abs(da - db) > 1e-12 * std::max({1.0, std::abs(da), std::abs(db)})) return da < db;
    return raw(a).real() < raw(b).real();
  });

  SpectralData out;
  out.eigenvalues.resize(n);
  out.right.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto src = order[static_cast<std::size_t>(k)];
    out.eigenvalues(k) = raw(src);
    out.right.col(k) = solver.eigenvectors().col(src);
    detail::fix_gauge(out.right.col(k));
  }

  out.condition_estimate = detail::condition_number(out.right);
  if (!(out.condition_estimate <= kDefectiveCondition))
    throw NearDefectiveError(
        fmt::format("effective Hamiltonian is near-defective (eigenvector condition {:.3e})",
                    out.condition_estimate),
        out.condition_estimate);

  out.left = out.right.fullPivLu().inverse();
  out.residues.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) out.residues.push_back(out.right.col(k) * out.left.row(k));
  return out;
}

inline SpectralData eigendecompose(const EffectiveHamiltonian& h) { return eigendecompose(h.matrix); }

/// Single-excitation Green's function (omega - H)^-1 from the eigen-expansion.
inline CMatrix green_single(const SpectralData& spec, double omega) {
  const auto n = spec.size();
  CMatrix g = CMatrix::Zero(n, n);
  for (Eigen::Index nu = 0; nu < n; ++nu)
    g += spec.residues[static_cast<std::size_t>(nu)] / (omega - spec.eigenvalues(nu));
  return g;
}

/// Same quantity by a dense solve; used where the eigen route must not be trusted.
inline CMatrix green_direct(const CMatrix& h, Complex omega) {
  const auto n = h.rows();
  CMatrix shifted = omega * CMatrix::Identity(n, n) - h;
  return shifted.partialPivLu().inverse();
}

}  // namespace antibunch
