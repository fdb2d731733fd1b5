#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "antibunch/types.hpp"

namespace antibunch {

/// Positions below this separation (in units of the resonant wavelength)
/// are rejected rather than regularized.
inline constexpr double kMinSeparation = 1e-9;

enum class EnvironmentTag { free_space, waveguide };

inline const char* to_string(EnvironmentTag tag) {
  return tag == EnvironmentTag::free_space ? "free_space" : "waveguide";
}

/// Emitters in free space. Lengths are in units of the resonant wavelength
/// lambda_0 = 2 pi c / omega_0; frequencies in units of gamma0.
struct AtomArray {
  std::vector<Vec3> positions;
  std::vector<CVec3> dipoles;  // unit vectors; common magnitude absorbed in gamma0
  double omega0 = 0.0;         // reference only, H is stored relative to it
  double gamma0 = 1.0;

  std::size_t size() const { return positions.size(); }

  void validate() const {
    if (positions.empty()) throw ValidationError("atom array is empty");
    if (dipoles.size() != positions.size())
      throw ValidationError(fmt::format("atom array has {} positions but {} dipoles",
                                        positions.size(), dipoles.size()));
    if (!(gamma0 > 0.0)) throw ValidationError("gamma0 must be positive");
    for (std::size_t i = 0; i < dipoles.size(); ++i) {
      if (std::abs(dipoles[i].norm() - 1.0) > 1e-12)
        throw ValidationError(fmt::format("dipole {} is not a unit vector (norm {})", i,
                                          dipoles[i].norm()));
    }
    for (std::size_t i = 0; i < positions.size(); ++i)
      for (std::size_t j = i + 1; j < positions.size(); ++j)
        if ((positions[i] - positions[j]).norm() <= kMinSeparation)
          throw CoincidentPointsError(
              fmt::format("atoms {} and {} are closer than {}", i, j, kMinSeparation));
  }
};

/// Emitters on a single-mode waveguide with direction-dependent emission.
struct WaveguideParams {
  double gamma_f = 1.0;  // forward emission rate
  double gamma_b = 1.0;  // backward emission rate
  double gamma_r = 0.0;  // loss out of the guided mode
  double kz = 2.0 * kPi; // guided wavenumber; z in units of lambda_wg gives 2 pi
  std::vector<double> z_positions;

  std::size_t size() const { return z_positions.size(); }
  double gamma_wg() const { return gamma_f + gamma_b; }
  double asymmetry() const { return gamma_f > 0.0 ? gamma_b / gamma_f : INFINITY; }

  void validate() const {
    if (z_positions.empty()) throw ValidationError("waveguide chain is empty");
    if (gamma_f < 0.0 || gamma_b < 0.0 || gamma_r < 0.0)
      throw ValidationError("waveguide rates must be non-negative");
    if (!(gamma_f + gamma_b > 0.0))
      throw ValidationError("total waveguide emission rate must be positive");
    for (std::size_t i = 1; i < z_positions.size(); ++i)
      if (!(z_positions[i] > z_positions[i - 1]))
        throw ValidationError("z_positions must be strictly increasing");
  }
};

/// N x N non-Hermitian single-excitation Hamiltonian. `matrix` holds
/// H - omega0 (detunings); `omega0` records the subtracted offset.
struct EffectiveHamiltonian {
  CMatrix matrix;
  EnvironmentTag environment = EnvironmentTag::free_space;
  double total_onsite_decay = 1.0;
  double omega0 = 0.0;

  Eigen::Index size() const { return matrix.rows(); }
};

/// Retarded vacuum dyadic Green's tensor at wavenumber k, normalized so the
/// far field is exp(ikR)/(4 pi R) times the transverse projector.
inline Eigen::Matrix3cd free_space_dyadic_green(const Vec3& r, const Vec3& r_prime, double k) {
  const Vec3 sep = r - r_prime;
  const double dist = sep.norm();
  if (dist <= kMinSeparation)
    throw CoincidentPointsError(fmt::format("Green's tensor at separation {}", dist));
  if (!(k > 0.0)) throw ValidationError("wavenumber must be positive");
  const Vec3 unit = sep / dist;
  const double kr = k * dist;
  const double kr2 = kr * kr;
  const Complex prefactor = std::exp(kI * kr) / (4.0 * kPi * dist);
  const Complex transverse = 1.0 + (kI * kr - 1.0) / kr2;
  const Complex longitudinal = (3.0 - 3.0 * kI * kr - kr2) / kr2;
  Eigen::Matrix3cd g = transverse * Eigen::Matrix3cd::Identity();
  g += longitudinal * (unit * unit.transpose()).cast<Complex>();
  return prefactor * g;
}

/// Dipole-dipole coupling through the vacuum field. The prefactor 3 pi gamma0 / k0
/// makes Im of the coincident-point limit equal gamma0 / 2, matching the diagonal.
inline EffectiveHamiltonian build_heff_free_space(const AtomArray& array) {
  array.validate();
  const auto n = static_cast<Eigen::Index>(array.size());
  const double k0 = 2.0 * kPi;
  const double scale = 3.0 * kPi * array.gamma0 / k0;
  EffectiveHamiltonian h;
  h.environment = EnvironmentTag::free_space;
  h.total_onsite_decay = array.gamma0;
  h.omega0 = array.omega0;
  h.matrix = CMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    h.matrix(i, i) = Complex(0.0, -0.5 * array.gamma0);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto g = free_space_dyadic_green(array.positions[i], array.positions[j], k0);
      const Complex ij = -scale * array.dipoles[i].dot(g * array.dipoles[j]);
      const Complex ji = -scale * array.dipoles[j].dot(g.transpose() * array.dipoles[i]);
      h.matrix(i, j) = ij;
      h.matrix(j, i) = ji;
    }
  }
  return h;
}

inline EffectiveHamiltonian build_heff_waveguide(const WaveguideParams& params) {
  params.validate();
  const auto n = static_cast<Eigen::Index>(params.size());
  EffectiveHamiltonian h;
  h.environment = EnvironmentTag::waveguide;
  h.total_onsite_decay = params.gamma_wg() + params.gamma_r;
  h.matrix = CMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) {
        h.matrix(i, i) = Complex(0.0, -0.5 * h.total_onsite_decay);
        continue;
      }
      const double phase =
          params.kz * std::abs(params.z_positions[i] - params.z_positions[j]);
      const double rate = i > j ? params.gamma_f : params.gamma_b;
      h.matrix(i, j) = -kI * rate * std::exp(kI * phase);
    }
  }
  return h;
}

}  // namespace antibunch
