#include <gtest/gtest.h>

#include "antibunch/scenarios.hpp"
#include "antibunch/spectral.hpp"

using namespace antibunch;

namespace {

SpectralData square_spectrum() { return eigendecompose(square_array(0.1, 0.25 * kPi).build().hamiltonian); }

SpectralData chain_spectrum() {
  return eigendecompose(chiral_chain(5, 0.22, 0.01, 0.1).build().hamiltonian);
}

}  // namespace

TEST(Spectral, SquareArrayEigenvalues) {
  // Frozen from an independent NumPy diagonalization of the same matrix.
  const auto spec = square_spectrum();
  const double re[] = {2.8226, 3.90898, -0.87911, -5.85246};
  const double decay[] = {0.07676, 0.12397, 0.15136, 3.64790};
  ASSERT_EQ(spec.size(), 4);
  for (int k = 0; k < 4; ++k) {
    EXPECT_NEAR(spec.eigenvalues(k).real(), re[k], 1e-4) << k;
    EXPECT_NEAR(spec.decay_rate(k), decay[k], 1e-5) << k;
  }
  EXPECT_NEAR(spec.min_decay_rate(), 0.07676, 1e-5);
}

TEST(Spectral, ChiralChainDecayRates) {
  const auto spec = chain_spectrum();
  const double decay[] = {0.45322, 0.60155, 1.00717, 1.53272, 1.90534};
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(spec.decay_rate(k), decay[k], 1e-5) << k;
}

TEST(Spectral, BiorthogonalCompleteAndReconstructs) {
  for (const auto& h : {square_array(0.1, 0.25 * kPi).build().hamiltonian,
                        chiral_chain(5, 0.22, 0.01, 0.1).build().hamiltonian}) {
    const auto spec = eigendecompose(h);
    EXPECT_LT(spec.biorthogonality_error(), 1e-10);
    EXPECT_LT(spec.completeness_error(), 1e-10);
    EXPECT_LT(spec.reconstruction_error(h.matrix), 1e-10);
  }
}

TEST(Spectral, SortedByDecayThenEnergy) {
  const auto spec = chain_spectrum();
  for (Eigen::Index k = 1; k < spec.size(); ++k)
    EXPECT_LE(spec.decay_rate(k - 1), spec.decay_rate(k));
  // Equal decay rates fall back to Re E.
  CMatrix h = CMatrix::Zero(3, 3);
  h.diagonal() << Complex(2.0, -0.5), Complex(-1.0, -0.5), Complex(0.0, -0.1);
  const auto diag = eigendecompose(h);
  EXPECT_EQ(diag.eigenvalues(0), Complex(0.0, -0.1));
  EXPECT_EQ(diag.eigenvalues(1), Complex(-1.0, -0.5));
  EXPECT_EQ(diag.eigenvalues(2), Complex(2.0, -0.5));
}

TEST(Spectral, GaugeAndDeterminism) {
  const auto a = square_spectrum();
  const auto b = square_spectrum();
  EXPECT_EQ(a.eigenvalues, b.eigenvalues);
  EXPECT_EQ(a.right, b.right);
  EXPECT_EQ(a.left, b.left);
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const auto col = a.right.col(k);
    EXPECT_NEAR(col.norm(), 1.0, 1e-14);
    // First component within a near-tie of the largest magnitude.
    const double largest = col.cwiseAbs().maxCoeff();
    Eigen::Index pivot = 0;
    while (std::abs(col(pivot)) < largest * (1.0 - 1e-9)) ++pivot;
    EXPECT_NEAR(col(pivot).imag(), 0.0, 1e-14);
    EXPECT_GT(col(pivot).real(), 0.0);
  }
}

TEST(Spectral, ReciprocalLeftVectorsAreTransposedRight) {
  const auto spec = square_spectrum();
  for (Eigen::Index k = 0; k < spec.size(); ++k) {
    const CVector r = spec.right.col(k);
    const CVector l = spec.left.row(k).transpose();
    const Complex ratio = (r.transpose() * l)(0, 0) / (r.transpose() * r)(0, 0);
    EXPECT_LT((l - ratio * r).norm(), 1e-10 * l.norm()) << k;
  }
}

TEST(Spectral, GreenFunctionMatchesDenseSolve) {
  const auto h = chiral_chain(5, 0.22, 0.01, 0.1).build().hamiltonian;
  const auto spec = eigendecompose(h);
  for (double w : {-1.0, 0.3, 2.5})
    EXPECT_LT(relative_difference(green_single(spec, w), green_direct(h.matrix, w)), 1e-12);
}

TEST(Spectral, NearDefectiveIsRejected) {
  CMatrix jordan(2, 2);
  jordan << Complex(0, -0.5), 1.0, 1e-24, Complex(0, -0.5);
  EXPECT_THROW(eigendecompose(jordan), NearDefectiveError);
  // A perfectly cascaded chain is an exact Jordan block.
  try {
    eigendecompose(chiral_chain(3, 0.2, 0.0, 0.0).build().hamiltonian);
    FAIL() << "expected NearDefectiveError";
  } catch (const NearDefectiveError& e) {
    EXPECT_GT(e.condition(), kDefectiveCondition);
  }
}

TEST(Spectral, NearDegenerateButDiagonalizableIsKept) {
  CMatrix h = CMatrix::Zero(2, 2);
  h.diagonal() << Complex(0.0, -0.5), Complex(1e-10, -0.5);
  EXPECT_NO_THROW(eigendecompose(h));
}

TEST(Spectral, DiagonalResiduesAreElementary) {
  CMatrix h = CMatrix::Zero(3, 3);
  h.diagonal() << Complex(0.3, -0.2), Complex(-1.0, -0.6), Complex(0.0, -1.4);
  const auto spec = eigendecompose(h);
  for (Eigen::Index k = 0; k < 3; ++k) {
    EXPECT_EQ(spec.eigenvalues(k), h(k, k));
    CMatrix unit = CMatrix::Zero(3, 3);
    unit(k, k) = 1.0;
    EXPECT_LT((spec.residues[static_cast<std::size_t>(k)] - unit).norm(), 1e-15);
  }
}

TEST(Spectral, DimerResiduesAreSymmetricAndAntisymmetric) {
  AtomArray a;
  a.positions = {Vec3::Zero(), Vec3(0.2, 0.0, 0.0)};
  a.dipoles = {CVec3(0, 0, 1), CVec3(0, 0, 1)};
  const auto spec = eigendecompose(build_heff_free_space(a));
  CMatrix plus = CMatrix::Constant(2, 2, 0.5);
  CMatrix minus = plus;
  minus(0, 1) = minus(1, 0) = -0.5;
  const auto& r0 = spec.residues[0];
  const auto& r1 = spec.residues[1];
  const bool order = (r0 - minus).norm() < 1e-12;
  EXPECT_LT((order ? r0 - minus : r0 - plus).norm(), 1e-12);
  EXPECT_LT((order ? r1 - plus : r1 - minus).norm(), 1e-12);
}

TEST(Spectral, SingleAtomGreenFunction) {
  const auto spec = eigendecompose(single_atom().build().hamiltonian);
  for (double w : {-1.0, 0.0, 2.0})
    EXPECT_LT(std::abs(green_single(spec, w)(0, 0) - 1.0 / Complex(w, 0.5)), 1e-15);
}

TEST(Spectral, GreenFunctionHighFrequencyLimit) {
  const auto spec = square_spectrum();
  const double w = 1e8;
  EXPECT_LT((w * green_single(spec, w) - CMatrix::Identity(4, 4)).norm(), 1e-6);
}
