#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "random_bath.hpp"
#include "vbdecoh/bath.hpp"
#include "vbdecoh/errors.hpp"
#include "vbdecoh/spin_model.hpp"
#include "vbdecoh/spin_operators.hpp"

using namespace vbdecoh;

namespace {

CentralSpinParams central(double E = 0.0) {
  CentralSpinParams c;
  c.E = E;
  return c;
}

double rel_hermiticity(const CMatrix& h) { return (h - h.adjoint()).norm() / std::max(1.0, h.norm()); }

}  // namespace

TEST_CASE("electron gyromagnetic anchor") {
  CHECK(PhysicalConstants::g_e * PhysicalConstants::mu_B == doctest::Approx(28.02).epsilon(1e-3));
}

TEST_CASE("zero-field splitting spectrum") {
  const auto h = build_cluster_hamiltonian(central(), {}, {}, MagneticField{}, HamiltonianMode::full);
  REQUIRE(h.rows() == 3);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  CHECK(es.eigenvalues()(0) == doctest::Approx(-2313.3333).epsilon(1e-6));
  CHECK(es.eigenvalues()(1) == doctest::Approx(1156.6667).epsilon(1e-6));
  CHECK(es.eigenvalues()(2) == doctest::Approx(1156.6667).epsilon(1e-6));

  Eigen::SelfAdjointEigenSolver<CMatrix> es_e(electron_hamiltonian(central(50.0), MagneticField{}));
  CHECK(es_e.eigenvalues()(2) - es_e.eigenvalues()(1) == doctest::Approx(100.0).epsilon(1e-9));
}

TEST_CASE("pseudo-secular mode drops only the S_x, S_y hyperfine blocks") {
  Mat3 A = Mat3::Zero();
  A(0, 0) = A(1, 1) = A(0, 1) = A(1, 0) = 20.0;
  A(2, 0) = A(0, 2) = 3.0;
  A(2, 2) = 40.0;
  const std::vector<BathSpin> spins{BathSpin::make(Vec3(1.0, 0.5, 0.8), species::N15(), A)};
  const auto field = MagneticField::along_c(50.0);
  const auto full = build_cluster_hamiltonian(central(), spins, {}, field, HamiltonianMode::full);
  const auto ps = build_cluster_hamiltonian(central(), spins, {}, field, HamiltonianMode::pseudo_secular);

  const auto S = SpinMatrices::make(2);
  const auto I = SpinMatrices::make(1);
  const ProductSpace space({3, 2});
  CMatrix expected = CMatrix::Zero(6, 6);
  for (int a = 0; a < 2; ++a) {
    CMatrix n = CMatrix::Zero(2, 2);
    for (int b = 0; b < 3; ++b) n += A(a, b) * I.component(b);
    space.add_product(expected, 0, S.component(a), 1, n);
  }
  CHECK((full - ps - expected).norm() < 1e-12);

  const CMatrix sz = space.embed(0, S.z);
  CHECK((ps * sz - sz * ps).norm() < 1e-12);
  CHECK((full * sz - sz * full).norm() > 1.0);
}

TEST_CASE("Hamiltonians are Hermitian") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const auto bath = testing::random_bath(3, rng);
    const auto pairs = pair_couplings(bath, 10.0);
    for (auto mode : {HamiltonianMode::full, HamiltonianMode::pseudo_secular}) {
      const auto h = build_cluster_hamiltonian(central(50.0), bath, pairs, MagneticField::along_c(10.0 * trial), mode);
      CHECK(rel_hermiticity(h) < 1e-12);
    }
  }
}

TEST_CASE("pseudo-secular block structure with z-diagonal quadrupole and pair terms") {
  std::mt19937_64 rng(11);
  auto bath = testing::random_bath(3, rng);
  std::vector<PairCoupling> pairs;
  for (std::size_t i = 0; i < bath.size(); ++i)
    for (std::size_t j = i + 1; j < bath.size(); ++j) pairs.push_back({i, j, Vec3(0.1, 0.1, -0.2).asDiagonal()});
  const auto h = build_cluster_hamiltonian(central(0.0), bath, pairs, MagneticField::along_c(30.0),
                                           HamiltonianMode::pseudo_secular);
  std::vector<int> dims{3};
  for (const auto& s : bath) dims.push_back(s.species.dim());
  const CMatrix sz = ProductSpace(dims).embed(0, SpinMatrices::make(2).z);
  CHECK((h * sz - sz * h).norm() == 0.0);
}

TEST_CASE("trace identity from term-wise assembly") {
  std::mt19937_64 rng(3);
  const auto bath = testing::random_bath(2, rng);
  const auto field = MagneticField::along_c(200.0);
  const auto pairs = pair_couplings(bath, 10.0);
  const auto mode = HamiltonianMode::full;
  const auto h = build_cluster_hamiltonian(central(50.0), bath, pairs, field, mode);

  CentralSpinParams silent;
  silent.D = silent.E = silent.g_e = 0.0;
  auto bare = bath;
  for (auto& s : bare) s.A.setZero();
  const ProductSpace space({3, bath[0].species.dim(), bath[1].species.dim()});
  const CMatrix electron = space.embed(0, electron_hamiltonian(central(50.0), field));
  const CMatrix nuclear = build_cluster_hamiltonian(silent, bare, {}, field, mode);
  const CMatrix hyperfine = build_cluster_hamiltonian(silent, bath, {}, field, mode) - nuclear;
  const CMatrix dipolar = build_cluster_hamiltonian(silent, bath, pairs, field, mode) - nuclear - hyperfine;

  CHECK((h - electron - nuclear - hyperfine - dipolar).norm() < 1e-9);
  CHECK(std::abs(electron.trace()) < 1e-9);
  const cplx parts = electron.trace() + nuclear.trace() + hyperfine.trace() + dipolar.trace();
  CHECK(std::abs(h.trace() - parts) < 1e-9);
}

TEST_CASE("doubling the field doubles only the Zeeman terms") {
  std::mt19937_64 rng(5);
  const auto bath = testing::random_bath(2, rng);
  const auto pairs = pair_couplings(bath, 10.0);
  auto c = central(50.0);
  const auto h0 = build_cluster_hamiltonian(c, bath, pairs, MagneticField{}, HamiltonianMode::full);
  const auto h1 = build_cluster_hamiltonian(c, bath, pairs, MagneticField::along_c(40.0), HamiltonianMode::full);
  const auto h2 = build_cluster_hamiltonian(c, bath, pairs, MagneticField::along_c(80.0), HamiltonianMode::full);
  CHECK(((h2 - h0) - 2.0 * (h1 - h0)).norm() < 1e-9);
  CHECK((h1 - h0).norm() > 1.0);
}

TEST_CASE("nuclear Zeeman splitting") {
  CHECK(zeeman_splitting(species::B11(), MagneticField::along_c(350.0)) == doctest::Approx(4.9).epsilon(0.03));
  CHECK(zeeman_splitting(species::B11(), MagneticField::along_c(350.0)) == doctest::Approx(4.782).epsilon(1e-3));
  CHECK(zeeman_splitting(species::N15(), MagneticField{}) == 0.0);
  const auto f = MagneticField::along_c(123.0);
  CHECK(zeeman_splitting(species::B11(), f) / zeeman_splitting(species::N15(), f) == doctest::Approx(3.2).epsilon(0.01));
}

TEST_CASE("level anticrossing field") {
  CHECK(gslac_field(central()) == doctest::Approx(123.8).epsilon(1e-3));
  CentralSpinParams nv;
  nv.D = 2870.0;
  CHECK(gslac_field(nv) == doctest::Approx(2870.0 / (2.0023 * PhysicalConstants::mu_B)).epsilon(1e-12));
  CHECK(gslac_field(nv) == doctest::Approx(102.4).epsilon(1e-3));
  nv.D = 0.0;
  CHECK(gslac_field(nv) == 0.0);
}

TEST_CASE("dimension cap and pair validation") {
  std::vector<BathSpin> bath;
  for (int k = 0; k < 6; ++k) bath.push_back(BathSpin::make(Vec3(k + 1.0, 0, 0), species::B11(), Mat3::Zero()));
  CHECK_THROWS_AS(build_cluster_hamiltonian(central(), bath, {}, MagneticField{}, HamiltonianMode::full), DimensionError);
  CHECK_NOTHROW(build_cluster_hamiltonian(central(), std::span(bath).first(5), {}, MagneticField{}, HamiltonianMode::full));
  const std::vector<PairCoupling> bad{{0, 7, Mat3::Identity()}};
  CHECK_THROWS_AS(build_cluster_hamiltonian(central(), std::span(bath).first(2), bad, MagneticField{}, HamiltonianMode::full),
                  ValidationError);
}

TEST_CASE("parameter validation") {
  CentralSpinParams c;
  c.qubit_levels = {0, 0};
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c.qubit_levels = {0, 2};
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c.qubit_levels = {0, -1};
  c.E = -1.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  SpinSpecies bad{"x", 1, 1.0, 2.0};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  const auto q = species::B11().quadrupole_tensor();
  CHECK(std::abs(q.trace()) < 1e-12);
  CHECK((q - q.transpose()).norm() == 0.0);
  CHECK(species::N15().quadrupole_tensor().isZero());
}

TEST_CASE("qubit states and pi pulse") {
  for (double bz : {0.0, 50.0, 123.8, 500.0}) {
    const auto q = electron_qubit(central(50.0), MagneticField::along_c(bz));
    CHECK(std::abs(q.q0.norm() - 1.0) < 1e-12);
    CHECK(std::abs(q.q0.dot(q.q1)) < 1e-12);
    CHECK((q.pi_pulse * q.q0 - q.q1).norm() < 1e-12);
    CHECK((q.pi_pulse * q.q1 - q.q0).norm() < 1e-12);
    CHECK((q.pi_pulse * q.pi_pulse - CMatrix::Identity(3, 3)).norm() < 1e-12);
  }
  const auto q = electron_qubit(central(0.0), MagneticField::along_c(10.0));
  CHECK(std::norm(q.q0(1)) == doctest::Approx(1.0));
  CHECK(std::norm(q.q1(2)) == doctest::Approx(1.0));
}
