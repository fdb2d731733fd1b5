#pragma once

#include <functional>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <fmt/format.h>

#include "antibunch/environment.hpp"
#include "antibunch/kernel.hpp"
#include "antibunch/spectral.hpp"
#include "antibunch/types.hpp"

namespace antibunch {

/// Plane wave in free space: propagation direction and transverse polarization.
struct FreeSpaceMode {
  Vec3 direction = Vec3::UnitZ();
  CVec3 polarization = CVec3(1.0, 0.0, 0.0);

  void validate() const {
    if (std::abs(direction.norm() - 1.0) > 1e-12)
      throw ValidationError("mode direction must be a unit vector");
    if (std::abs(polarization.norm() - 1.0) > 1e-12)
      throw ValidationError("mode polarization must be a unit vector");
    if (std::abs(polarization.dot(direction.cast<Complex>())) > 1e-12)
      throw ValidationError("mode polarization must be transverse to its direction");
  }
};

enum class GuidedDirection { forward, backward };

inline const char* to_string(GuidedDirection d) {
  return d == GuidedDirection::forward ? "forward" : "backward";
}

using PhotonMode = std::variant<FreeSpaceMode, GuidedDirection>;

/// Twin-photon setup: both incident photons share one mode, both detected
/// photons share another, distinct from the incident one.
struct ScatteringSetup {
  PhotonMode incident;
  PhotonMode detected;

  void validate() const {
    if (incident.index() != detected.index())
      throw ValidationError("incident and detected modes belong to different environments");
    if (const auto* in = std::get_if<FreeSpaceMode>(&incident)) {
      const auto& out = std::get<FreeSpaceMode>(detected);
      in->validate();
      out.validate();
      if ((in->direction - out.direction).norm() < 1e-12)
        throw ValidationError("detection along the incident direction is not supported");
    } else if (std::get<GuidedDirection>(incident) == std::get<GuidedDirection>(detected)) {
      throw ValidationError("detection along the incident direction is not supported");
    }
  }
};

/// Atom-mode coupling constants g_j for one mode. The quantization-volume
/// prefactor is set to one; it cancels in every normalized quantity.
inline CVector coupling_free_space(const AtomArray& array, const FreeSpaceMode& mode) {
  mode.validate();
  const double k0 = 2.0 * kPi;
  CVector g(static_cast<Eigen::Index>(array.size()));
  for (std::size_t j = 0; j < array.size(); ++j) {
    const Complex overlap = array.dipoles[j].cwiseProduct(mode.polarization).sum();
    g(static_cast<Eigen::Index>(j)) =
        -kI * overlap * std::exp(kI * k0 * mode.direction.dot(array.positions[j]));
  }
  return g;
}

inline CVector coupling_waveguide(const WaveguideParams& params, GuidedDirection direction) {
  const bool forward = direction == GuidedDirection::forward;
  const double amplitude = std::sqrt(forward ? params.gamma_f : params.gamma_b);
  const double sign = forward ? 1.0 : -1.0;
  CVector g(static_cast<Eigen::Index>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i)
    g(static_cast<Eigen::Index>(i)) =
        amplitude * std::exp(sign * kI * params.kz * params.z_positions[i]);
  return g;
}

/// Couplings of the incident and detected modes, both unconjugated.
struct Couplings {
  CVector incident;
  CVector detected;
};

enum class Side { absorption, emission };

/// Self-consistent atomic amplitudes: absorption s-_i = sum_j G_ij g_j,
/// emission s+_i = sum_j conj(g_j) G_ji.
inline CVector amplitudes_s(const SpectralData& spec, const CVector& coupling, double omega,
                            Side side) {
  const CMatrix g = green_single(spec, omega);
  if (side == Side::absorption) return g * coupling;
  return g.transpose() * coupling.conjugate();
}

/// Single-photon T-matrix element conj(g_out) . G . g_in.
inline Complex t_matrix_single(const CVector& g_out, const CVector& g_in, const CMatrix& green) {
  return (g_out.conjugate().transpose() * green * g_in)(0, 0);
}

using KernelEvaluator = std::function<CMatrix(double)>;

/// Q(Omega) through the residue sum and inversion. Holds its own copy of `spec`.
inline KernelEvaluator eigen_kernel(const SpectralData& spec) {
  return [spec](double omega_total) { return kernel_q(sigma_eigen(spec, omega_total)); };
}

/// Per-eigenstate constants C^(nu) of the twin-photon correlation
/// g2(tau) = |1 - sum_nu C^(nu) exp(-i (E_nu - omega) tau)|^2.
///
/// The nonlinear amplitude for the first detected photon leaving through
/// state nu is normalized by the squared single-photon amplitude; a single
/// emitter gives C = 1.
inline CVector c_constants(const SpectralData& spec, const KernelEvaluator& kernel,
                           const Couplings& couplings, double omega) {
  const auto n = spec.size();
  const double omega_total = 2.0 * omega;
  const CMatrix green = green_single(spec, omega);
  const CVector detected = couplings.detected.conjugate();
  const Complex linear = (detected.transpose() * green * couplings.incident)(0, 0);
  const double scale = couplings.incident.norm() * couplings.detected.norm();
  if (!(std::abs(linear) > 1e-12 * scale))
    throw LinearAmplitudeZeroError(
        fmt::format("single-photon amplitude {:.3e} vanishes at detuning {}", std::abs(linear),
                    omega));

  const CVector absorbed = green * couplings.incident;
  const CVector source = kernel(omega_total) * absorbed.cwiseProduct(absorbed).eval();

  CVector c(n);
  for (Eigen::Index nu = 0; nu < n; ++nu) {
    CMatrix partner = CMatrix::Zero(n, n);
    for (Eigen::Index mu = 0; mu < n; ++mu)
      partner += spec.residues[static_cast<std::size_t>(mu)] /
                 (omega_total - spec.eigenvalues(nu) - spec.eigenvalues(mu));
    const CVector first = spec.residues[static_cast<std::size_t>(nu)].transpose() * detected;
    const CVector second = partner.transpose() * detected;
    const Complex numerator = first.cwiseProduct(second).cwiseProduct(source).sum();
    c(nu) = -kI * numerator / (linear * linear);
  }
  return c;
}

/// Delay-resolved correlation with its eigenstate decomposition retained.
struct CorrelationTrace {
  CVector constants;
  CVector exponents;  // E_nu - omega
  std::vector<double> tau;
  std::vector<double> g2;
  double detuning = 0.0;
  std::map<std::string, double> metadata;

  Complex contribution(Eigen::Index nu, double t) const {
    return constants(nu) * std::exp(-kI * exponents(nu) * t);
  }
};

inline double g2_at(const CVector& constants, const CVector& exponents, double tau) {
  Complex sum = 0.0;
  for (Eigen::Index nu = 0; nu < constants.size(); ++nu)
    sum += constants(nu) * std::exp(-kI * exponents(nu) * tau);
  return std::norm(1.0 - sum);
}

inline CorrelationTrace g2_trace(const CVector& constants, const SpectralData& spec, double omega,
                                 std::vector<double> tau_grid) {
  for (std::size_t k = 0; k < tau_grid.size(); ++k) {
    if (tau_grid[k] < 0.0) throw ValidationError("delays must be non-negative");
    if (k > 0 && !(tau_grid[k] > tau_grid[k - 1]))
      throw ValidationError("delay grid must be strictly ascending");
  }
  CorrelationTrace trace;
  trace.constants = constants;
  trace.exponents = spec.eigenvalues.array() - omega;
  trace.detuning = omega;
  trace.g2.reserve(tau_grid.size());
  for (double t : tau_grid) trace.g2.push_back(g2_at(trace.constants, trace.exponents, t));
  trace.tau = std::move(tau_grid);
  return trace;
}

/// Uniform grid start, start + step, ... up to stop inclusive (within 1e-9 step).
inline std::vector<double> uniform_grid(double start, double stop, double step) {
  if (!(step > 0.0)) throw ValidationError("grid step must be positive");
  if (stop < start) throw ValidationError("grid stop precedes start");
  const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  std::vector<double> grid(count);
  for (std::size_t k = 0; k < count; ++k) grid[k] = start + static_cast<double>(k) * step;
  return grid;
}

}  // namespace antibunch
