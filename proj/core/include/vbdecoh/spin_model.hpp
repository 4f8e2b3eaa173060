#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vbdecoh/constants.hpp"
#include "vbdecoh/linalg.hpp"

namespace vbdecoh {

inline constexpr int kCentralSpinDim = 3;
inline constexpr long kDefaultMaxDim = 4096;

/// Spin-1 defect ground state. Electron basis ordering is m_S = +1, 0, -1.
struct CentralSpinParams {
  double D = 3470.0;  ///< axial zero-field splitting, MHz
  double E = 50.0;    ///< transverse zero-field splitting, MHz (stored as a magnitude)
  double g_e = PhysicalConstants::g_e;
  /// m_S labels of the |0>_q and |1>_q qubit states.
  std::array<int, 2> qubit_levels{0, -1};

  static constexpr int spin_S = 1;

  void validate() const;
  /// Row of `m_S` in the electron basis.
  static int level_index(int m_s) { return 1 - m_s; }
};

struct SpinSpecies {
  std::string label;
  int twice_spin = 1;
  double g_N = 0.0;
  double C_q = 0.0;  ///< quadrupole coupling constant, MHz

  double spin() const { return 0.5 * twice_spin; }
  int dim() const { return twice_spin + 1; }
  /// Axially symmetric traceless tensor with the principal axis along c.
  Mat3 quadrupole_tensor() const;
  void validate() const;
};

enum class Element { boron, nitrogen };
std::string_view to_string(Element e);

namespace species {
// Nuclear g-factors from standard nuclear data tables.
SpinSpecies B11();
SpinSpecies B10();
SpinSpecies N15();
/// 14N needs an explicit quadrupole constant; there is no default.
SpinSpecies N14(double C_q);
/// Lookup by label ("11B", "10B", "15N", "14N"). 14N takes `n14_cq` when given, else 0.
SpinSpecies by_label(std::string_view label, std::optional<double> n14_cq = std::nullopt);
Element element_of(const SpinSpecies& s);
}  // namespace species

struct BathSpin {
  Vec3 position = Vec3::Zero();  ///< Angstrom, defect at the origin
  SpinSpecies species;
  Mat3 A = Mat3::Zero();  ///< hyperfine tensor, MHz; H = S^T A I
  Mat3 Q = Mat3::Zero();  ///< quadrupole tensor, MHz; H = I^T Q I

  /// Builds a bath spin whose Q follows from the species' C_q.
  static BathSpin make(const Vec3& position, SpinSpecies species, const Mat3& A);
  void validate() const;
};

struct PairCoupling {
  std::size_t i = 0;
  std::size_t j = 0;
  Mat3 J = Mat3::Zero();  ///< MHz; H = I_i^T J I_j
};

struct MagneticField {
  Vec3 B = Vec3::Zero();  ///< mT
  static MagneticField along_c(double bz_mT) { return MagneticField{Vec3(0.0, 0.0, bz_mT)}; }
  bool on_axis() const { return std::abs(B.x()) < 1e-12 && std::abs(B.y()) < 1e-12; }
};

enum class HamiltonianMode { full, pseudo_secular };
std::string_view to_string(HamiltonianMode m);
HamiltonianMode hamiltonian_mode_from_string(std::string_view s);

struct HamiltonianOptions {
  long max_dim = kDefaultMaxDim;
};

/// Hilbert-space dimension of the electron plus `spins`, checked against `max_dim`.
long cluster_dimension(std::span<const BathSpin> spins, long max_dim = kDefaultMaxDim);

/// Electron-only part: zero-field splitting plus electron Zeeman, 3x3.
CMatrix electron_hamiltonian(const CentralSpinParams& central, const MagneticField& field);

/// Many-spin Hamiltonian of the electron and the given bath spins in MHz.
/// Pair indices refer to positions within `spins`.
CMatrix build_cluster_hamiltonian(const CentralSpinParams& central, std::span<const BathSpin> spins,
                                  std::span<const PairCoupling> pairs, const MagneticField& field,
                                  HamiltonianMode mode, const HamiltonianOptions& options = {});

/// Nuclear Zeeman splitting between adjacent m levels, MHz.
double zeeman_splitting(const SpinSpecies& s, const MagneticField& field);

/// Field (mT, along c) at which m_S = 0 and m_S = -1 cross.
double gslac_field(const CentralSpinParams& central);

/// Electron eigenstates that play the role of the qubit at a given field.
///
/// The qubit states are eigenvectors of the electron-only Hamiltonian that
/// adiabatically connect to the requested m_S levels. With an on-axis field
/// m_S = 0 is an exact eigenstate and the m_S = +-1 doublet is diagonalized
/// on its own, so the states stay well defined at the level crossing.
struct ElectronQubit {
  CVector q0;        ///< |0>_q in the m_S basis
  CVector q1;        ///< |1>_q in the m_S basis
  CMatrix pi_pulse;  ///< 3x3 ideal pi pulse: swaps q0 and q1, identity on the third state
};

ElectronQubit electron_qubit(const CentralSpinParams& central, const MagneticField& field);
/// Same selection for an arbitrary 3x3 electron Hamiltonian, e.g. one that
/// includes a static Overhauser field.
ElectronQubit electron_qubit(const CentralSpinParams& central, const CMatrix& he);

}  // namespace vbdecoh
