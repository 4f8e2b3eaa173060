#include "vbdecoh/spin_model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "vbdecoh/errors.hpp"
#include "vbdecoh/spin_operators.hpp"

namespace vbdecoh {

void CentralSpinParams::validate() const {
  const auto [a, b] = qubit_levels;
  auto valid = [](int m) { return m >= -1 && m <= 1; };
  if (!valid(a) || !valid(b) || a == b)
    throw ValidationError("qubit_levels must be two distinct values from {-1, 0, +1}");
  if (!std::isfinite(D) || !std::isfinite(E) || !std::isfinite(g_e))
    throw ValidationError("central spin parameters must be finite");
  if (E < 0.0) throw ValidationError("E is stored as a magnitude and must be >= 0");
}

Mat3 SpinSpecies::quadrupole_tensor() const {
  if (twice_spin < 2 || C_q == 0.0) return Mat3::Zero();
  const double I = spin();
  const double scale = C_q / (4.0 * I * (2.0 * I - 1.0));
  return scale * Vec3(-1.0, -1.0, 2.0).asDiagonal();
}

void SpinSpecies::validate() const {
  if (twice_spin < 1) throw ValidationError("species " + label + ": spin must be >= 1/2");
  if (twice_spin == 1 && C_q != 0.0)
    throw ValidationError("species " + label + ": spin-1/2 nuclei carry no quadrupole moment");
}

std::string_view to_string(Element e) { return e == Element::boron ? "B" : "N"; }

namespace species {

SpinSpecies B11() { return {"11B", 3, 1.7924, 3.72}; }
// C_q scaled from 11B by the quadrupole-moment ratio Q(10B)/Q(11B) = 84.59/40.59.
SpinSpecies B10() { return {"10B", 6, 0.6002, 3.72 * 84.59 / 40.59}; }
SpinSpecies N15() { return {"15N", 1, -0.5664, 0.0}; }
SpinSpecies N14(double C_q) { return {"14N", 2, 0.4038, C_q}; }

SpinSpecies by_label(std::string_view label, std::optional<double> n14_cq) {
  if (label == "11B") return B11();
  if (label == "10B") return B10();
  if (label == "15N") return N15();
  if (label == "14N") return N14(n14_cq.value_or(0.0));
  throw ValidationError("unknown nuclear species '" + std::string(label) + "'");
}

Element element_of(const SpinSpecies& s) {
  return s.label.ends_with('B') ? Element::boron : Element::nitrogen;
}

}  // namespace species

BathSpin BathSpin::make(const Vec3& position, SpinSpecies sp, const Mat3& A) {
  BathSpin out;
  out.position = position;
  out.Q = sp.quadrupole_tensor();
  out.species = std::move(sp);
  out.A = A;
  return out;
}

void BathSpin::validate() const {
  species.validate();
  if (!(Q - Q.transpose()).isZero(1e-9) || std::abs(Q.trace()) > 1e-9)
    throw ValidationError("quadrupole tensor must be symmetric and traceless");
  if (!A.allFinite() || !position.allFinite()) throw ValidationError("bath spin has non-finite entries");
}

std::string_view to_string(HamiltonianMode m) {
  return m == HamiltonianMode::full ? "full" : "pseudo_secular";
}

HamiltonianMode hamiltonian_mode_from_string(std::string_view s) {
  if (s == "full") return HamiltonianMode::full;
  if (s == "pseudo_secular" || s == "pseudo-secular") return HamiltonianMode::pseudo_secular;
  throw ValidationError("unknown Hamiltonian mode '" + std::string(s) + "'");
}

long cluster_dimension(std::span<const BathSpin> spins, long max_dim) {
  long dim = kCentralSpinDim;
  for (const auto& s : spins) {
    dim *= s.species.dim();
    if (dim > max_dim) {
      std::ostringstream msg;
      msg << "cluster too large: Hilbert dimension exceeds cap " << max_dim << " with "
          << spins.size() << " bath spins";
      throw DimensionError(msg.str());
    }
  }
  return dim;
}

CMatrix electron_hamiltonian(const CentralSpinParams& central, const MagneticField& field) {
  const auto S = SpinMatrices::make(2);
  const double zeeman = central.g_e * PhysicalConstants::mu_B;
  CMatrix h = central.D * (S.z * S.z - (2.0 / 3.0) * CMatrix::Identity(3, 3));
  h += 0.5 * central.E * (S.plus * S.plus + S.minus * S.minus);
  for (int a = 0; a < 3; ++a) h += zeeman * field.B[a] * S.component(a);
  return h;
}

CMatrix build_cluster_hamiltonian(const CentralSpinParams& central, std::span<const BathSpin> spins,
                                  std::span<const PairCoupling> pairs, const MagneticField& field,
                                  HamiltonianMode mode, const HamiltonianOptions& options) {
  const long dim = cluster_dimension(spins, options.max_dim);
  for (const auto& p : pairs) {
    if (p.i >= spins.size() || p.j >= spins.size() || p.i == p.j) {
      std::ostringstream msg;
      msg << "pair coupling (" << p.i << ", " << p.j << ") references spins outside the cluster of size "
          << spins.size();
      throw ValidationError(msg.str());
    }
  }

  std::vector<int> dims{kCentralSpinDim};
  std::vector<SpinMatrices> ops;
  ops.reserve(spins.size());
  for (const auto& s : spins) {
    dims.push_back(s.species.dim());
    ops.push_back(SpinMatrices::make(s.species.twice_spin));
  }
  const ProductSpace space(dims);
  const auto S = SpinMatrices::make(2);

  CMatrix h = CMatrix::Zero(dim, dim);
  space.add_local(h, 0, electron_hamiltonian(central, field));

  for (std::size_t k = 0; k < spins.size(); ++k) {
    const auto& spin = spins[k];
    const auto& I = ops[k];
    const int site = static_cast<int>(k) + 1;

    // Nuclear Zeeman and quadrupole act on the nucleus alone.
    const double gamma = spin.species.g_N * PhysicalConstants::mu_N;
    CMatrix local = CMatrix::Zero(I.dim, I.dim);
    for (int a = 0; a < 3; ++a) local -= gamma * field.B[a] * I.component(a);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        if (spin.Q(a, b) != 0.0) local += spin.Q(a, b) * I.component(a) * I.component(b);
    space.add_local(h, site, local);

    // Hyperfine: S_a A_ab I_b, or only the S_z row in pseudo-secular mode.
    const int first_row = mode == HamiltonianMode::pseudo_secular ? 2 : 0;
    for (int a = first_row; a < 3; ++a) {
      CMatrix n = CMatrix::Zero(I.dim, I.dim);
      for (int b = 0; b < 3; ++b) n += spin.A(a, b) * I.component(b);
      if (!n.isZero(0.0)) space.add_product(h, 0, S.component(a), site, n);
    }
  }

  for (const auto& p : pairs) {
    const auto& Ii = ops[p.i];
    const auto& Ij = ops[p.j];
    for (int a = 0; a < 3; ++a) {
      CMatrix n = CMatrix::Zero(Ij.dim, Ij.dim);
      for (int b = 0; b < 3; ++b) n += p.J(a, b) * Ij.component(b);
      if (!n.isZero(0.0))
        space.add_product(h, static_cast<int>(p.i) + 1, Ii.component(a), static_cast<int>(p.j) + 1, n);
    }
  }
  return h;
}

double zeeman_splitting(const SpinSpecies& s, const MagneticField& field) {
  return std::abs(s.g_N * PhysicalConstants::mu_N * field.B.norm());
}

double gslac_field(const CentralSpinParams& central) {
  if (central.D < 0.0) throw ValidationError("gslac_field requires D >= 0");
  return central.D / (central.g_e * PhysicalConstants::mu_B);
}

namespace {

// Picks the eigenvector that best represents m_S = target; ties within the
// +-1 doublet go to the branch that connects to `target` as B_z -> 0+.
int select_branch(const Eigen::SelfAdjointEigenSolver<CMatrix>& es, int target, int exclude) {
  const int row = CentralSpinParams::level_index(target);
  int best = -1;
  double best_overlap = -1.0;
  for (int k = 0; k < 3; ++k) {
    if (k == exclude) continue;
    const double overlap = std::norm(es.eigenvectors()(row, k));
    const bool tie = best >= 0 && std::abs(overlap - best_overlap) < 1e-9;
    if (tie) {
      // eigenvalues are ascending: m_S = -1 takes the lower state, +1 the upper one
      if (target > 0) best = k;
      continue;
    }
    if (overlap > best_overlap) {
      best = k;
      best_overlap = overlap;
    }
  }
  return best;
}

}  // namespace

ElectronQubit electron_qubit(const CentralSpinParams& central, const MagneticField& field) {
  return electron_qubit(central, electron_hamiltonian(central, field));
}

ElectronQubit electron_qubit(const CentralSpinParams& central, const CMatrix& he) {
  central.validate();
  if (he.rows() != 3 || he.cols() != 3) throw ValidationError("electron Hamiltonian must be 3x3");

  CMatrix vectors(3, 3);
  if (std::abs(he(1, 0)) == 0.0 && std::abs(he(1, 2)) == 0.0) {
    // m_S = 0 decouples exactly; diagonalize the +-1 doublet separately so that a
    // degeneracy with m_S = 0 at the crossing cannot rotate the basis.
    Eigen::Matrix2cd doublet;
    doublet << he(0, 0), he(0, 2), he(2, 0), he(2, 2);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es2(doublet);
    vectors.setZero();
    vectors(0, 0) = es2.eigenvectors()(0, 0);
    vectors(2, 0) = es2.eigenvectors()(1, 0);
    vectors(1, 1) = 1.0;
    vectors(0, 2) = es2.eigenvectors()(0, 1);
    vectors(2, 2) = es2.eigenvectors()(1, 1);
    // columns: lower doublet state, m_S = 0, upper doublet state
    auto pick = [&](int m) {
      if (m == 0) return 1;
      const double lower = std::norm(vectors(CentralSpinParams::level_index(m), 0));
      const double upper = std::norm(vectors(CentralSpinParams::level_index(m), 2));
      if (std::abs(lower - upper) < 1e-9) return m < 0 ? 0 : 2;
      return lower > upper ? 0 : 2;
    };
    const int k0 = pick(central.qubit_levels[0]);
    int k1 = pick(central.qubit_levels[1]);
    if (k1 == k0) k1 = k0 == 0 ? 2 : 0;
    ElectronQubit q;
    q.q0 = vectors.col(k0);
    q.q1 = vectors.col(k1);
    const CVector rest = vectors.col(3 - k0 - k1);
    q.pi_pulse = q.q0 * q.q1.adjoint() + q.q1 * q.q0.adjoint() + rest * rest.adjoint();
    return q;
  }

  Eigen::SelfAdjointEigenSolver<CMatrix> es(he);
  const int k0 = select_branch(es, central.qubit_levels[0], -1);
  const int k1 = select_branch(es, central.qubit_levels[1], k0);
  const int k2 = 3 - k0 - k1;
  ElectronQubit q;
  q.q0 = es.eigenvectors().col(k0);
  q.q1 = es.eigenvectors().col(k1);
  const CVector rest = es.eigenvectors().col(k2);
  q.pi_pulse = q.q0 * q.q1.adjoint() + q.q1 * q.q0.adjoint() + rest * rest.adjoint();
  return q;
}

}  // namespace vbdecoh
