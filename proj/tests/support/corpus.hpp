#pragma once

// Seeded corpus of small random emitter arrays shared by the kernel tests
// and the acceptance runner.

#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "antibunch.hpp"

namespace corpus {

struct Case {
  std::string label;
  antibunch::EffectiveHamiltonian hamiltonian;
  antibunch::Couplings couplings;
  std::vector<double> omegas;  // total two-photon detunings
};

inline constexpr std::uint64_t kSeed = 20240611;

inline antibunch::AtomArray random_array(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> box(-0.3, 0.3);
  std::normal_distribution<double> normal;
  antibunch::AtomArray array;
  while (static_cast<int>(array.positions.size()) < n) {
    antibunch::Vec3 r(box(rng), box(rng), box(rng));
    bool clear = true;
    for (const auto& q : array.positions) clear = clear && (r - q).norm() > 0.08;
    if (!clear) continue;
    antibunch::Vec3 d(normal(rng), normal(rng), normal(rng));
    array.positions.push_back(r);
    array.dipoles.push_back(d.normalized().cast<antibunch::Complex>());
  }
  return array;
}

/// 10 free-space arrays and 10 chiral chains (xi cycling 0.01, 0.3, 1) of
/// 3 to 5 emitters, each with five real total detunings.
inline std::vector<Case> make_corpus() {
  using namespace antibunch;
  std::mt19937_64 rng(kSeed);
  std::uniform_int_distribution<int> size(3, 5);
  std::uniform_real_distribution<double> omega(-4.0, 4.0);
  std::uniform_real_distribution<double> spacing(0.05, 0.45);
  std::uniform_real_distribution<double> loss(0.0, 0.2);
  std::vector<Case> cases;
  for (int k = 0; k < 10; ++k) {
    const auto array = random_array(rng, size(rng));
    FreeSpaceMode in;
    FreeSpaceMode out;
    out.direction = -Vec3::UnitZ();
    Case c{fmt::format("free{}", k), build_heff_free_space(array),
           {coupling_free_space(array, in), coupling_free_space(array, out)}, {}};
    for (int w = 0; w < 5; ++w) c.omegas.push_back(omega(rng));
    cases.push_back(std::move(c));
  }
  const double xis[] = {0.01, 0.3, 1.0};
  for (int k = 0; k < 10; ++k) {
    const double xi = xis[k % 3];
    WaveguideParams p;
    p.gamma_f = 1.0 / (1.0 + xi);
    p.gamma_b = xi / (1.0 + xi);
    p.gamma_r = loss(rng);
    const int n = size(rng);
    double z = 0.0;
    for (int i = 0; i < n; ++i) {
      p.z_positions.push_back(z);
      z += spacing(rng);
    }
    Case c{fmt::format("chiral{}_xi{}", k, xi), build_heff_waveguide(p),
           {coupling_waveguide(p, GuidedDirection::forward),
            coupling_waveguide(p, GuidedDirection::backward)},
           {}};
    for (int w = 0; w < 5; ++w) c.omegas.push_back(omega(rng));
    cases.push_back(std::move(c));
  }
  return cases;
}

}  // namespace corpus
