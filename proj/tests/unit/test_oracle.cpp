#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "random_bath.hpp"
#include "vbdecoh/bath.hpp"
#include "vbdecoh/errors.hpp"
#include "vbdecoh/oracle.hpp"

using namespace vbdecoh;

TEST_CASE("empty bath gives the bare echo") {
  CentralSpinParams c;
  c.E = 0.0;
  const auto times = uniform_times(1.0, 51);
  const auto r = exact_coherence(c, {}, {}, MagneticField::along_c(40.0), HamiltonianMode::full, {}, times);
  for (std::size_t k = 0; k < times.size(); ++k) {
    CHECK(std::abs(r.raw[k]) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::abs(r.curve.values[k] - cplx(1.0, 0.0)) < 1e-12);
  }
}

TEST_CASE("density matrix stays a physical state") {
  std::mt19937_64 rng(77);
  const auto times = uniform_times(2.0, 41);
  for (int trial = 0; trial < 4; ++trial) {
    const auto bath = testing::random_bath(3, rng);
    const auto pairs = pair_couplings(bath, 10.0);
    std::vector<SpinInitialState> states(bath.size());
    states[0] = SpinInitialState::polarized(0.6, Vec3(0.3, 0.0, -1.0).normalized());
    const auto r = exact_coherence(CentralSpinParams{}, bath, pairs, MagneticField::along_c(100.0 * trial),
                                   HamiltonianMode::full, states, times);
    CHECK(r.diagnostics.max_trace_error < 1e-10);
    CHECK(r.diagnostics.max_hermiticity_error < 1e-10);
    REQUIRE(r.diagnostics.electron_purity.size() == times.size());
    for (double p : r.diagnostics.electron_purity) {
      CHECK(p <= 1.0 + 1e-10);
      CHECK(p >= 1.0 / 3.0 - 1e-10);
    }
    CHECK(r.diagnostics.electron_purity.front() == doctest::Approx(1.0).epsilon(1e-10));
    for (const auto& v : r.curve.values) CHECK(std::abs(v) <= 1.0 + 1e-9);
  }
}

TEST_CASE("oversized systems are refused") {
  std::vector<BathSpin> bath;
  for (int k = 0; k < 4; ++k) bath.push_back(BathSpin::make(Vec3(k + 1.0, 0, 0), species::B11(), Mat3::Identity()));
  const std::vector<SpinInitialState> states(bath.size());
  const auto times = uniform_times(0.1, 21);
  CHECK_THROWS_AS(exact_coherence(CentralSpinParams{}, bath, {}, MagneticField{}, HamiltonianMode::full, states, times,
                                  OracleLimit{100}),
                  DimensionError);
  CHECK_THROWS_AS(OracleLimit{0}.validate(), ValidationError);
  const std::vector<SpinInitialState> short_states(2);
  CHECK_THROWS_AS(exact_coherence(CentralSpinParams{}, bath, {}, MagneticField{}, HamiltonianMode::full, short_states,
                                  times),
                  ValidationError);
}
