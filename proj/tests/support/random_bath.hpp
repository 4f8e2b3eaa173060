#pragma once

#include <random>
#include <vector>

#include "vbdecoh/spin_model.hpp"

namespace vbdecoh::testing {

/// Small random bath of 15N and 11B spins (at most two borons) with random
/// hyperfine tensors of a few MHz and positions a few A from the defect.
inline std::vector<BathSpin> random_bath(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> radius(1.5, 6.0);
  std::uniform_real_distribution<double> scale(0.2, 8.0);
  std::bernoulli_distribution coin(0.5);
  std::vector<BathSpin> bath;
  int borons = 0;
  for (int k = 0; k < n; ++k) {
    Vec3 dir(unit(rng), unit(rng), unit(rng));
    if (dir.norm() < 1e-3) dir = Vec3::UnitX();
    const Vec3 pos = radius(rng) * dir.normalized();
    Mat3 A;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) A(a, b) = unit(rng);
    A = scale(rng) * 0.5 * (A + A.transpose());
    const bool boron = borons < 2 && coin(rng);
    if (boron) ++borons;
    bath.push_back(BathSpin::make(pos, boron ? species::B11() : species::N15(), A));
  }
  return bath;
}

}  // namespace vbdecoh::testing
