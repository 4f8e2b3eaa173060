#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Geometry>
#include <filesystem>
#include <numbers>

#include "vbdecoh/bath.hpp"
#include "vbdecoh/bath_io.hpp"
#include "vbdecoh/errors.hpp"

using namespace vbdecoh;

namespace {

LatticeSpec lattice(double radius) {
  LatticeSpec l;
  l.radius = radius;
  return l;
}

IsotopeConfig n14() {
  IsotopeConfig iso;
  iso.nitrogen = NitrogenIsotope::N14;
  iso.n14_cq = -2.0;
  return iso;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("vbdecoh_test_" + name);
}

}  // namespace

TEST_CASE("lattice sites grow with radius and exclude the vacancy") {
  std::size_t last = 0;
  for (double r : {2.0, 5.0, 10.0, 15.0}) {
    const auto sites = generate_lattice_sites(lattice(r));
    CHECK(sites.size() >= last);
    last = sites.size();
    for (const auto& s : sites) CHECK(s.position.norm() > 0.1);
  }
  const auto first = generate_lattice_sites(lattice(1.5));
  REQUIRE(first.size() == 3);
  for (const auto& s : first) {
    CHECK(s.element == Element::nitrogen);
    CHECK(s.position.norm() == doctest::Approx(2.504 / std::sqrt(3.0)).epsilon(1e-9));
  }
  LatticeSpec bad;
  bad.radius = -1.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("first-neighbor shell of the 14N-referenced dataset") {
  const auto l = lattice(1.5);
  const auto bath = generate_bath(l, n14(), make_synthetic_dataset(l));
  REQUIRE(bath.size() == 3);
  for (const auto& s : bath) {
    CHECK(s.species.label == "14N");
    CHECK(s.A(2, 2) == doctest::Approx(47.14).epsilon(1e-6));
  }

  const auto b15 = generate_bath(l, IsotopeConfig{}, make_synthetic_dataset(l));
  const double ratio = species::N15().g_N / species::N14(0.0).g_N;
  CHECK(ratio == doctest::Approx(-1.403).epsilon(1e-3));
  for (std::size_t k = 0; k < 3; ++k) CHECK(b15[k].A(2, 2) == doctest::Approx(47.14 * ratio).epsilon(1e-9));
}

TEST_CASE("first-neighbor tensors are related by 120 degree rotations") {
  const auto l = lattice(1.5);
  const auto bath = generate_bath(l, IsotopeConfig{}, make_synthetic_dataset(l));
  const Mat3 R = Eigen::AngleAxisd(2.0 * std::numbers::pi / 3.0, Vec3::UnitZ()).toRotationMatrix();
  for (const auto& a : bath) {
    const Mat3 rotated = R * a.A * R.transpose();
    const Vec3 pos = R * a.position;
    bool matched = false;
    for (const auto& b : bath)
      if ((b.position - pos).norm() < 1e-6) matched = (b.A - rotated).norm() < 1e-6;
    CHECK(matched);
  }
}

TEST_CASE("isotope rescaling keeps eigenvectors") {
  const auto l = lattice(6.0);
  const auto ds = make_synthetic_dataset(l);
  const auto a = generate_bath(l, n14(), ds);
  const auto b = generate_bath(l, IsotopeConfig{}, ds);
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    const auto& x = a[k];
    const auto& y = *std::find_if(b.begin(), b.end(), [&](const BathSpin& s) { return (s.position - x.position).norm() < 1e-9; });
    const double r = y.species.g_N / x.species.g_N;
    CHECK((y.A - r * x.A).norm() <= 1e-12 * std::max(1.0, y.A.norm()));
  }
}

TEST_CASE("natural abundance is deterministic per seed") {
  const auto l = lattice(12.0);
  const auto ds = make_synthetic_dataset(l);
  IsotopeConfig iso;
  iso.boron = BoronIsotope::natural;
  iso.rng_seed = 42;
  const auto a = generate_bath(l, iso, ds);
  const auto b = generate_bath(l, iso, ds);
  REQUIRE(a.size() == b.size());
  std::size_t b10 = 0, borons = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].species.label == b[k].species.label);
    CHECK(a[k].A == b[k].A);
    if (species::element_of(a[k].species) == Element::boron) {
      ++borons;
      if (a[k].species.label == "10B") ++b10;
    }
  }
  CHECK(double(b10) / borons == doctest::Approx(1.0 - 0.801).epsilon(0.35));
  iso.rng_seed = 43;
  const auto c = generate_bath(l, iso, ds);
  bool differs = false;
  for (std::size_t k = 0; k < std::min(a.size(), c.size()); ++k) differs |= a[k].species.label != c[k].species.label;
  CHECK(differs);

  IsotopeConfig nat_n;
  nat_n.nitrogen = NitrogenIsotope::natural;
  CHECK_THROWS_AS(nat_n.validate(), ValidationError);
}

TEST_CASE("dipolar tensor") {
  const auto b11 = species::B11();
  const auto z1 = BathSpin::make(Vec3(0, 0, 0), b11, Mat3::Zero());
  const auto z2 = BathSpin::make(Vec3(0, 0, 2.0), b11, Mat3::Zero());
  const auto J = dipolar_tensor(z1, z2).J;
  CHECK(J(2, 2) == doctest::Approx(-2.0 * J(0, 0)));
  CHECK(J(0, 0) == doctest::Approx(J(1, 1)));
  CHECK(std::abs(J(0, 1)) + std::abs(J(0, 2)) + std::abs(J(1, 2)) < 1e-15);
  CHECK((J - J.transpose()).norm() == 0.0);

  // in-plane neighbors at distance a: n lies in the plane, so J_zz = prefactor g^2 / a^3
  const double a = 2.504;
  const auto p1 = BathSpin::make(Vec3(0, 0, 0), b11, Mat3::Zero());
  const auto p2 = BathSpin::make(Vec3(a, 0, 0), b11, Mat3::Zero());
  const double hand = 1e-7 * 5.0507837461e-27 * 5.0507837461e-27 / 6.62607015e-34 * 1e30 * 1e-6 * 1.7924 * 1.7924 /
                      (a * a * a);
  CHECK(std::abs(dipolar_tensor(p1, p2).J(2, 2) - hand) < 1e-10);

  const auto far = BathSpin::make(Vec3(0, 0, 4.0), b11, Mat3::Zero());
  CHECK((dipolar_tensor(z1, far).J * 8.0 - J).norm() < 1e-15);
  CHECK_THROWS_AS(dipolar_tensor(z1, z1), ValidationError);
}

TEST_CASE("pair couplings respect the cutoff and d^-3 law") {
  const auto l = lattice(8.0);
  const auto bath = generate_bath(l, IsotopeConfig{}, make_synthetic_dataset(l));
  const auto pairs = pair_couplings(bath, 4.0);
  CHECK(!pairs.empty());
  for (const auto& p : pairs) {
    CHECK(p.i < p.j);
    const double d = (bath[p.i].position - bath[p.j].position).norm();
    CHECK(d <= 4.0);
    const double g = std::abs(bath[p.i].species.g_N * bath[p.j].species.g_N);
    CHECK(p.J.norm() * d * d * d / g == doctest::Approx(std::sqrt(6.0) * PhysicalConstants::nuclear_nuclear_dipolar));
  }
}

TEST_CASE("hyperfine shell profile") {
  const auto l = lattice(12.0);
  const auto bath = generate_bath(l, IsotopeConfig{}, make_synthetic_dataset(l));
  const auto profile = hyperfine_shell_profile(bath, 40);
  REQUIRE(profile.size() == 40);
  for (std::size_t k = 1; k < profile.size(); ++k) CHECK(profile[k].second <= profile[k - 1].second * (1.0 + 1e-12));
  CHECK(hyperfine_shell_profile(bath, 0).empty());
  const auto shells = hyperfine_shells(bath);
  REQUIRE(shells.size() >= 6);
  CHECK(shells[0].multiplicity == 3);
  CHECK(shells[0].element == Element::nitrogen);
  // first three nitrogen and boron shells
  std::vector<double> norms;
  int n_shells = 0, b_shells = 0;
  for (const auto& s : shells) {
    if (s.element == Element::nitrogen && n_shells < 3) ++n_shells, norms.push_back(s.norm);
    if (s.element == Element::boron && b_shells < 3) ++b_shells, norms.push_back(s.norm);
  }
  const double span = *std::max_element(norms.begin(), norms.end()) / *std::min_element(norms.begin(), norms.end());
  CHECK(span > 30.0);
  CHECK(span < 1000.0);
}

TEST_CASE("dataset CSV round trip, coverage and layer detection") {
  const auto l = lattice(7.0);
  const auto ds = make_synthetic_dataset(l);
  const auto path = temp_file("ds.csv");
  ds.write_csv(path);
  const auto back = HyperfineDataset::read_csv(path);
  REQUIRE(back.size() == ds.size());
  CHECK(back.off_lattice_entries(l).empty());
  const auto layer = back.detect_vacancy_layer();
  REQUIRE(layer.has_value());
  CHECK(*layer == doctest::Approx(0.0));
  const auto a = generate_bath(l, IsotopeConfig{}, ds);
  const auto b = generate_bath(l, IsotopeConfig{}, back);
  REQUIRE(a.size() == b.size());
  for (const auto& x : a) {
    const auto it = std::find_if(b.begin(), b.end(), [&](const BathSpin& s) { return (s.position - x.position).norm() < 1e-6; });
    REQUIRE(it != b.end());
    CHECK((it->A - x.A).norm() < 1e-6);
  }

  // in-plane entries have vanishing out-of-plane components
  for (const auto& s : a)
    if (std::abs(s.position.z()) < 1e-9) CHECK(std::abs(s.A(0, 2)) + std::abs(s.A(2, 0)) + std::abs(s.A(1, 2)) + std::abs(s.A(2, 1)) < 1e-9);

  // coverage gap: a dataset built for a smaller radius
  const auto small = make_synthetic_dataset(lattice(4.0));
  try {
    generate_bath(l, IsotopeConfig{}, small);
    FAIL("missing entries were not reported");
  } catch (const DatasetError& e) {
    CHECK(std::string(e.what()).find("missing hyperfine entr") != std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST_CASE("bath snapshot round trip") {
  const auto l = lattice(6.0);
  IsotopeConfig iso;
  iso.boron = BoronIsotope::natural;
  const auto bath = generate_bath(l, iso, make_synthetic_dataset(l));
  const auto path = temp_file("bath.json");
  save_bath(path, bath);
  const auto back = load_bath(path);
  REQUIRE(back.size() == bath.size());
  for (std::size_t k = 0; k < bath.size(); ++k) {
    CHECK(back[k].species.label == bath[k].species.label);
    CHECK((back[k].A - bath[k].A).norm() == 0.0);
    CHECK((back[k].Q - bath[k].Q).norm() == 0.0);
    CHECK((back[k].position - bath[k].position).norm() == 0.0);
  }
  std::filesystem::remove(path);
  CHECK_THROWS(bath_from_json(nlohmann::json{{"format", "other"}}));
}

TEST_CASE("neighbor grid matches brute force") {
  const auto l = lattice(9.0);
  const auto bath = generate_bath(l, IsotopeConfig{}, make_synthetic_dataset(l));
  const NeighborGrid grid(bath, 3.0);
  for (std::size_t i = 0; i < bath.size(); i += 17) {
    std::vector<std::size_t> brute;
    for (std::size_t j = 0; j < bath.size(); ++j)
      if (j != i && (bath[j].position - bath[i].position).norm() <= 4.2) brute.push_back(j);
    CHECK(grid.within(i, 4.2) == brute);
  }
}
