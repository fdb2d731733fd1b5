#pragma once

#include <array>
#include <cmath>
#include <queue>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "antibunch/environment.hpp"
#include "antibunch/spectral.hpp"
#include "antibunch/types.hpp"

namespace antibunch {

// Frequencies in this module are detunings: Omega is the two-photon energy
// measured from 2 omega0, consistent with H stored relative to omega0.

/// Pair propagator Sigma(Omega) from the residue sum. Products of residues
/// are entrywise: Sigma_ij = -i sum g^a_ij g^b_ij / (Omega - E_a - E_b).
inline CMatrix sigma_eigen(const SpectralData& spec, double omega_total) {
  const auto n = spec.size();
  CMatrix sigma = CMatrix::Zero(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    const auto& ga = spec.residues[static_cast<std::size_t>(a)];
    for (Eigen::Index b = 0; b < n; ++b) {
      const auto& gb = spec.residues[static_cast<std::size_t>(b)];
      const Complex denom = omega_total - spec.eigenvalues(a) - spec.eigenvalues(b);
      sigma += ga.cwiseProduct(gb) / denom;
    }
  }
  return -kI * sigma;
}

struct QuadratureOptions {
  double relative_tolerance = 1e-7;
  int max_intervals = 20000;
};

namespace detail {

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1].
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Interval {
  double lo;
  double hi;
  CMatrix value;
  double error;
  bool operator<(const Interval& other) const { return error < other.error; }
};

template <class F>
Interval kronrod15(F&& f, double lo, double hi) {
  const double center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  CMatrix fc = f(center);
  CMatrix kronrod = kKronrodWeights[7] * fc;
  CMatrix gauss = kGaussWeights[3] * fc;
  for (int k = 0; k < 7; ++k) {
    const double dx = half * kKronrodNodes[static_cast<std::size_t>(k)];
    CMatrix pair = f(center - dx) + f(center + dx);
    kronrod += kKronrodWeights[static_cast<std::size_t>(k)] * pair;
    if (k % 2 == 1) gauss += kGaussWeights[static_cast<std::size_t>(k / 2)] * pair;
  }
  Interval out{lo, hi, half * kronrod, 0.0};
  out.error = (half * (kronrod - gauss)).norm();
  return out;
}

}  // namespace detail

/// Pair propagator by direct real-axis integration of G_ij(w) G_ij(Omega - w) / 2 pi,
/// with G from a dense solve. The whole line is covered through
/// w = Omega/2 + s tan(phi); eigenvalue positions serve only as breakpoints.
inline CMatrix sigma_quadrature(const CMatrix& h, double omega_total,
                                const QuadratureOptions& options = {}) {
  const auto n = h.rows();
  const CVector poles = h.eigenvalues();
  double scale = 1.0;
  for (Eigen::Index k = 0; k < poles.size(); ++k)
    scale = std::max(scale, std::abs(poles(k) - 0.5 * omega_total));
  const double center = 0.5 * omega_total;

  auto integrand = [&](double phi) -> CMatrix {
    const double t = std::tan(phi);
    const double omega = center + scale * t;
    const double jacobian = scale * (1.0 + t * t);
    const CMatrix g1 = green_direct(h, Complex(omega, 0.0));
    const CMatrix g2 = green_direct(h, Complex(omega_total - omega, 0.0));
    return g1.cwiseProduct(g2) * (jacobian / (2.0 * kPi));
  };

  std::vector<double> cuts = {-0.5 * kPi, 0.5 * kPi};
  for (Eigen::Index k = 0; k < poles.size(); ++k) {
    for (double x : {poles(k).real(), omega_total - poles(k).real()})
      cuts.push_back(std::atan((x - center) / scale));
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-12; }),
             cuts.end());

  std::priority_queue<detail::Interval> queue;
  CMatrix total = CMatrix::Zero(n, n);
  double error = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    auto piece = detail::kronrod15(integrand, cuts[k], cuts[k + 1]);
    total += piece.value;
    error += piece.error;
    queue.push(std::move(piece));
  }

  int intervals = static_cast<int>(queue.size());
  while (error > options.relative_tolerance * total.norm()) {
    if (intervals >= options.max_intervals)
      throw QuadratureError(fmt::format(
          "pair-propagator quadrature did not reach relative {:.1e} within {} intervals "
          "(estimate {:.2e})",
          options.relative_tolerance, options.max_intervals, error / total.norm()));
    detail::Interval worst = queue.top();
    queue.pop();
    const double mid = 0.5 * (worst.lo + worst.hi);
    auto left = detail::kronrod15(integrand, worst.lo, mid);
    auto right = detail::kronrod15(integrand, mid, worst.hi);
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    queue.push(std::move(left));
    queue.push(std::move(right));
    ++intervals;
  }
  // Re-sum to shed the drift of incremental updates.
  total.setZero();
  while (!queue.empty()) {
    total += queue.top().value;
    queue.pop();
  }
  return total;
}

inline constexpr double kSingularKernelCondition = 1e12;

/// Two-photon kernel Q = Sigma^-1.
inline CMatrix kernel_q(const CMatrix& sigma) {
  const double cond = detail::condition_number(sigma);
  if (!(cond < kSingularKernelCondition))
    throw SingularKernelError(
        fmt::format("pair propagator is singular (condition {:.3e})", cond), cond);
  return sigma.fullPivLu().inverse();
}

/// Two-excitation eigenstates on the hard-core pair basis {(i, j), i < j}.
///
/// Amplitude matrices are symmetric with zero diagonal. Right amplitudes satisfy
/// sum_ij |Psi^R_ij|^2 = 1 and left amplitudes sum_ij Psi^L_ij Psi^R_ij = 1.
struct TwoExcitationData {
  Eigen::Index sites = 0;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pair_basis;
  CMatrix pair_hamiltonian;
  CVector energies;
  std::vector<CMatrix> right_amplitudes;
  std::vector<CMatrix> left_amplitudes;
  std::vector<CVector> emission_right;
  std::vector<CVector> emission_left;
  double condition_estimate = 1.0;

  Eigen::Index size() const { return energies.size(); }
};

/// Two-excitation Hamiltonian restricted to pairs of distinct sites: the
/// diagonal is H_ii + H_jj and a pair hops to another pair sharing one site
/// with the single-excitation amplitude of the moving excitation.
inline CMatrix pair_hamiltonian(const CMatrix& h,
                                std::vector<std::pair<Eigen::Index, Eigen::Index>>* basis_out = nullptr) {
  const auto n = h.rows();
  std::vector<std::pair<Eigen::Index, Eigen::Index>> basis;
  Eigen::MatrixXi index = Eigen::MatrixXi::Constant(n, n, -1);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      index(i, j) = index(j, i) = static_cast<int>(basis.size());
      basis.emplace_back(i, j);
    }
  const auto m = static_cast<Eigen::Index>(basis.size());
  CMatrix h2 = CMatrix::Zero(m, m);
  for (Eigen::Index p = 0; p < m; ++p) {
    const auto [i, j] = basis[static_cast<std::size_t>(p)];
    h2(p, p) = h(i, i) + h(j, j);
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k == i || k == j) continue;
      h2(p, index(k, j)) += h(i, k);  // excitation k -> i, j spectator
      h2(p, index(i, k)) += h(j, k);  // excitation k -> j, i spectator
    }
  }
  if (basis_out) *basis_out = std::move(basis);
  return h2;
}

inline TwoExcitationData build_two_excitation(const CMatrix& h) {
  TwoExcitationData out;
  out.sites = h.rows();
  out.pair_hamiltonian = pair_hamiltonian(h, &out.pair_basis);
  if (out.pair_basis.empty()) {
    out.energies.resize(0);
    return out;
  }
  const SpectralData pair_spec = eigendecompose(out.pair_hamiltonian);
  out.energies = pair_spec.eigenvalues;
  out.condition_estimate = pair_spec.condition_estimate;

  const auto n = out.sites;
  const double half = 1.0 / std::sqrt(2.0);
  for (Eigen::Index mu = 0; mu < pair_spec.size(); ++mu) {
    CMatrix right = CMatrix::Zero(n, n);
    CMatrix left = CMatrix::Zero(n, n);
    for (std::size_t p = 0; p < out.pair_basis.size(); ++p) {
      const auto [i, j] = out.pair_basis[p];
      const auto pi = static_cast<Eigen::Index>(p);
      right(i, j) = right(j, i) = half * pair_spec.right(pi, mu);
      left(i, j) = left(j, i) = half * pair_spec.left(mu, pi);
    }
    out.emission_right.push_back((h * right).diagonal());
    out.emission_left.push_back((left * h).diagonal());
    out.right_amplitudes.push_back(std::move(right));
    out.left_amplitudes.push_back(std::move(left));
  }
  return out;
}

inline TwoExcitationData build_two_excitation(const EffectiveHamiltonian& h) {
  return build_two_excitation(h.matrix);
}

/// Kernel from the two-excitation expansion: a single-atom term plus the
/// collective sum over pair eigenstates. gamma_tot is the on-site decay rate.
inline CMatrix kernel_q_two_exc(const TwoExcitationData& two_exc, double omega_total,
                                double gamma_tot) {
  const auto n = two_exc.sites;
  CMatrix q = (kI * (omega_total + kI * gamma_tot)) * CMatrix::Identity(n, n);
  for (Eigen::Index mu = 0; mu < two_exc.size(); ++mu) {
    const auto k = static_cast<std::size_t>(mu);
    q -= (4.0 * kI / (omega_total - two_exc.energies(mu))) *
         (two_exc.emission_right[k] * two_exc.emission_left[k].transpose());
  }
  return q;
}

}  // namespace antibunch
