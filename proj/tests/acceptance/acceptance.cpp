// Acceptance suite: prints one PASS/FAIL line per criterion.
// Usage: acceptance [criterion numbers...]; no arguments runs all eight.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <thread>

#include "random_bath.hpp"
#include "vbdecoh/bath.hpp"
#include "vbdecoh/cce.hpp"
#include "vbdecoh/eseem.hpp"
#include "vbdecoh/oracle.hpp"
#include "vbdecoh/sweep.hpp"

using namespace vbdecoh;

namespace {

// tolerances
constexpr double kExactTol = 1e-8;
constexpr double kExactSeconds = 60.0;
constexpr double kEseemTol = 1e-6;
constexpr double kAnchorTol = 0.40;
constexpr double kT2Zero = 0.114, kT2Plateau = 0.220, kT2High = 31.0;
constexpr double kLine = 67.0, kLineTol = 5.0, kLineDrift = 2.0;
constexpr double kSecularTol = 0.10;
constexpr double kGslacRatio = 5.0, kHighRatio = 50.0, kFlatness = 0.20;
constexpr double kDropShellT2 = 0.5, kPolarizationTol = 0.15;
constexpr double kNormTol = 1e-6;
constexpr double kInvariantSeconds = 60.0;

constexpr double kBathRadius = 20.0;
constexpr int kLowFieldSamples = 4;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int threads() { return std::max(1u, std::thread::hardware_concurrency()); }

const std::vector<BathSpin>& full_bath() {
  static const std::vector<BathSpin> bath = [] {
    const LatticeSpec l{.radius = kBathRadius};
    return generate_bath(l, IsotopeConfig{}, make_synthetic_dataset(l));
  }();
  return bath;
}

RunSettings settings(double bz, int order, double r_bath, std::size_t cap, int points) {
  RunSettings s;
  s.B_z = bz;
  s.policy.max_order = order;
  s.policy.r_bath = r_bath;
  s.policy.r_connect = 6.0;
  s.policy.max_clusters_per_order = cap;
  s.policy.bath_samples = bz < 100.0 ? kLowFieldSamples : 0;
  s.grid.points = points;
  s.threads = threads();
  return s;
}

double t2_of(const PointResult& p) { return p.fit.resolved ? p.fit.T2 : std::nan(""); }

bool within(double value, double target, double rel) { return std::abs(value - target) <= rel * target; }

double max_abs_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(std::abs(a[k]) - std::abs(b[k])));
  return d;
}

ClusterPolicy everything(int order) {
  ClusterPolicy p;
  p.max_order = order;
  p.r_bath = std::numeric_limits<double>::max();
  p.r_connect = std::numeric_limits<double>::max();
  p.r_pair = 1e6;
  return p;
}

Outcome oracle_exactness() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240607);
  std::uniform_real_distribution<double> field(0.0, 3000.0);
  const auto times = uniform_times(1.0, 101);
  double worst = 0.0;
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 1 + trial % 4;
    const auto bath = testing::random_bath(n, rng);
    SystemInputs sys;
    sys.bath = bath;
    sys.field = MagneticField::along_c(field(rng));
    sys.r_pair = 1e6;
    const auto g = gcce_coherence(sys, everything(n), times);
    const auto pairs = pair_couplings(bath, sys.r_pair);
    const std::vector<SpinInitialState> states(bath.size());
    const auto exact = exact_coherence(sys.central, bath, pairs, sys.field, sys.mode, states, times);
    worst = std::max(worst, max_abs_diff(g.total.values, exact.curve.values));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {worst < kExactTol && secs < kExactSeconds,
          fmt("25 baths, max |d|L|| = %.2e (< %.0e), %.1f s (< %.0f s)", worst, kExactTol, secs, kExactSeconds)};
}

Outcome eseem_equivalence() {
  const LatticeSpec l{.radius = 6.0};
  const auto bath = generate_bath(l, IsotopeConfig{}, make_synthetic_dataset(l));
  const auto transverse = [](const BathSpin& s) {
    const bool off_plane = s.species.twice_spin == 1 && std::abs(s.position.z()) > 1.0;
    return off_plane ? std::hypot(s.A(2, 0), s.A(2, 1)) : -1.0;
  };
  const auto spin = *std::max_element(bath.begin(), bath.end(),
                                      [&](const BathSpin& a, const BathSpin& b) { return transverse(a) < transverse(b); });
  CentralSpinParams central;
  central.E = 0.0;
  const std::vector<BathSpin> one{spin};
  const std::vector<SpinInitialState> states(1);
  const auto times = uniform_times(4.0, 801);
  double worst = 0.0;
  for (double bz : {10.0, 50.0, 100.0}) {
    const auto field = MagneticField::along_c(bz);
    const auto exact = exact_coherence(central, one, {}, field, HamiltonianMode::pseudo_secular, states, times);
    const auto formula = eseem_L1(std::vector<EseemParams>{EseemParams::from_spin(spin, central, field)}, times);
    for (std::size_t k = 0; k < times.size(); ++k) worst = std::max(worst, std::abs(std::abs(exact.curve.values[k]) - formula[k]));
  }
  return {worst < kEseemTol, fmt("%s spin, B = 10/50/100 mT, max deviation %.2e (< %.0e)", spin.species.label.c_str(), worst, kEseemTol)};
}

Outcome table_anchors() {
  const auto& bath = full_bath();
  const auto p0 = run_point(bath, settings(0.0, 3, kBathRadius, 5000, 201));
  const auto pp = run_point(bath, settings(20.0, 3, kBathRadius, 5000, 201));
  const auto ph = run_point(bath, settings(3000.0, 3, kBathRadius, 5000, 201));
  const double t0 = t2_of(p0), tp = t2_of(pp), th = t2_of(ph);
  const bool ok = within(t0, kT2Zero, kAnchorTol) && within(tp, kT2Plateau, kAnchorTol) && within(th, kT2High, kAnchorTol);
  return {ok, fmt("T2(0) = %.0f ns [target %.0f, order %d], T2(20 mT) = %.0f ns [%.0f, order %d], "
                  "T2(3 T) = %.1f us [%.0f, order %d], tolerance +-%.0f%%",
                  t0 * 1e3, kT2Zero * 1e3, p0.fit_order, tp * 1e3, kT2Plateau * 1e3, pp.fit_order, th, kT2High,
                  ph.fit_order, kAnchorTol * 100)};
}

Outcome modulation_line() {
  const auto& bath = full_bath();
  std::vector<double> peaks;
  std::string detail;
  for (double bz : {20.0, 50.0, 80.0}) {
    auto s = settings(bz, 2, 12.0, 0, 1001);
    s.grid.t_max = 1.0;
    s.spectrum = true;
    const auto r = ablate_bath(bath, Ablation::nitrogen_only, s);
    const double f = r.point.spectrum && !r.point.spectrum->peaks.empty() ? r.point.spectrum->peaks[0].frequency : 0.0;
    peaks.push_back(f);
    detail += fmt("%s%.0f mT: %.1f MHz", detail.empty() ? "" : ", ", bz, f);
    if (r.point.spectrum && r.point.spectrum->peaks.size() > 1)
      detail += fmt(" (next %.1f)", r.point.spectrum->peaks[1].frequency);
  }
  bool ok = true;
  for (double f : peaks) ok = ok && std::abs(f - kLine) <= kLineTol;
  const double drift = *std::max_element(peaks.begin(), peaks.end()) - *std::min_element(peaks.begin(), peaks.end());
  ok = ok && drift < kLineDrift;
  return {ok, detail + fmt("; target %.0f +- %.0f MHz, drift %.1f MHz (< %.0f)", kLine, kLineTol, drift, kLineDrift)};
}

Outcome pseudo_secular_limit() {
  const auto& bath = full_bath();
  auto s = settings(3000.0, 2, kBathRadius, 5000, 201);
  const double full = t2_of(run_point(bath, s));
  s.mode = HamiltonianMode::pseudo_secular;
  const double ps = t2_of(run_point(bath, s));
  const double rel = std::abs(full - ps) / full;
  return {rel < kSecularTol, fmt("T2 full %.2f us, pseudo-secular %.2f us, difference %.1f%% (< %.0f%%)", full, ps, rel * 100, kSecularTol * 100)};
}

Outcome region_structure() {
  const auto& bath = full_bath();
  const CentralSpinParams central;
  const auto t2 = [&](double bz) { return t2_of(run_point(bath, settings(bz, 2, 15.0, 3000, 201))); };
  const double g = t2(gslac_field(central));
  const double low = t2(50.0);
  std::vector<double> plateau;
  for (double bz : {350.0, 1000.0, 3000.0}) plateau.push_back(t2(bz));
  const double hi = *std::max_element(plateau.begin(), plateau.end());
  const double lo = *std::min_element(plateau.begin(), plateau.end());
  const double flat = (hi - lo) / hi;
  const bool ok = g < low / kGslacRatio && plateau[0] > kHighRatio * low && flat < kFlatness;
  return {ok, fmt("T2(gslac) = %.1f ns, T2(50 mT) = %.0f ns, T2(350 mT / 1 T / 3 T) = %.1f / %.1f / %.1f us; "
                  "gslac ratio %.1f (> %.0f), 350 mT ratio %.0f (> %.0f), flatness %.0f%% (< %.0f%%)",
                  g * 1e3, low * 1e3, plateau[0], plateau[1], plateau[2], low / g, kGslacRatio, plateau[0] / low,
                  kHighRatio, flat * 100, kFlatness * 100)};
}

Outcome ablations() {
  const auto& bath = full_bath();
  const auto dropped = ablate_bath(bath, Ablation::drop_first_shell, settings(0.0, 2, 15.0, 3000, 201));
  const double td = t2_of(dropped.point);
  std::vector<double> t2s;
  for (double p : {0.0, 0.3, 0.62, 1.0}) {
    auto s = settings(50.0, 2, 15.0, 3000, 201);
    s.polarization.p = p;
    t2s.push_back(t2_of(run_point(bath, s)));
  }
  const double hi = *std::max_element(t2s.begin(), t2s.end());
  const double lo = *std::min_element(t2s.begin(), t2s.end());
  const double spread = (hi - lo) / t2s[0];
  const bool ok = td > kDropShellT2 && spread < kPolarizationTol;
  return {ok, fmt("without first shell T2(0) = %.2f us (> %.1f); polarization 0/0.3/0.62/1 at 50 mT: "
                  "%.0f/%.0f/%.0f/%.0f ns, spread %.1f%% (< %.0f%%)",
                  td, kDropShellT2, t2s[0] * 1e3, t2s[1] * 1e3, t2s[2] * 1e3, t2s[3] * 1e3, spread * 100, kPolarizationTol * 100)};
}

Outcome invariants() {
  std::vector<std::string> failed;
  const auto check = [&](bool ok, const char* what) {
    if (!ok) failed.emplace_back(what);
  };

  // normalization of expansion curves
  const auto start_time = std::chrono::steady_clock::now();
  const LatticeSpec l{.radius = 8.0};
  const auto bath = generate_bath(l, IsotopeConfig{}, make_synthetic_dataset(l));
  double excess = 0.0, start = 0.0;
  for (double bz : {0.0, 50.0, 350.0, 3000.0}) {
    auto s = settings(bz, 2, 8.0, 0, 101);
    const auto p = run_point(bath, s);
    for (const auto& c : p.gcce.cumulative)
      for (const auto& v : c.values) excess = std::max(excess, std::abs(v) - 1.0);
    start = std::max(start, std::abs(p.gcce.total.values.front() - cplx(1.0, 0.0)));
  }
  check(excess <= kNormTol, "|L| <= 1");
  check(start <= kNormTol, "L(0) = 1");

  // bare electron echo
  double l0_err = 0.0;
  for (double E : {0.0, 50.0})
    for (double bz : {0.0, 30.0, 124.0, 500.0}) {
      SystemInputs sys;
      sys.central.E = E;
      sys.field = MagneticField::along_c(bz);
      for (const auto& v : electron_only_curve(sys, uniform_times(1.0, 51))) l0_err = std::max(l0_err, std::abs(std::abs(v) - 0.5));
    }
  check(l0_err < 1e-12, "raw |L0| = 0.5");

  // hermiticity
  std::mt19937_64 rng(99);
  double herm = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto spins = testing::random_bath(1 + trial % 4, rng);
    const auto h = build_cluster_hamiltonian(CentralSpinParams{}, spins, pair_couplings(spins, 10.0),
                                             MagneticField::along_c(150.0 * trial), HamiltonianMode::full);
    herm = std::max(herm, (h - h.adjoint()).norm() / h.norm());
  }
  check(herm < 1e-14, "hermiticity");

  // dipolar d^-3
  double scaling = 0.0;
  for (double d : {1.5, 2.5, 4.0, 7.0}) {
    const auto a = BathSpin::make(Vec3::Zero(), species::B11(), Mat3::Zero());
    const Vec3 dir = Vec3(0.3, -0.5, 0.8).normalized();
    const auto near = dipolar_tensor(a, BathSpin::make(d * dir, species::N15(), Mat3::Zero())).J;
    const auto far = dipolar_tensor(a, BathSpin::make(2.0 * d * dir, species::N15(), Mat3::Zero())).J;
    scaling = std::max(scaling, (near - 8.0 * far).norm() / near.norm());
  }
  check(scaling < 1e-12, "dipolar d^-3");

  // determinism, including thread count
  auto s = settings(0.0, 2, 6.0, 0, 101);
  const auto a = run_point(bath, s);
  s.threads = 1;
  const auto b = run_point(bath, s);
  bool same = a.gcce.total.values.size() == b.gcce.total.values.size();
  for (std::size_t k = 0; same && k < a.gcce.total.values.size(); ++k) same = a.gcce.total.values[k] == b.gcce.total.values[k];
  check(same, "deterministic reruns");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  check(secs < kInvariantSeconds, "runtime");

  std::string detail = fmt("max |L| - 1 = %.1e, |L(0) - 1| = %.1e, ||L0| - 0.5| = %.1e, hermiticity %.1e, d^-3 %.1e, reruns %s, %.0f s",
                           excess, start, l0_err, herm, scaling, same ? "identical" : "differ", secs);
  for (const auto& f : failed) detail += "; FAILED " + f;
  return {failed.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"oracle exactness", oracle_exactness},       {"ESEEM equivalence", eseem_equivalence},
      {"table anchors", table_anchors},             {"modulation frequency", modulation_line},
      {"pseudo-secular high-field", pseudo_secular_limit}, {"region structure", region_structure},
      {"ablations", ablations},                     {"invariants", invariants}};
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %d %s: %s  %s  [%.0f s]\n", id, criteria[k].first.c_str(), o.pass ? "PASS" : "FAIL",
                o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
