#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "vbdecoh/spin_model.hpp"

namespace vbdecoh {

/// Hexagonal boron nitride lattice around a boron vacancy at `defect_site`.
struct LatticeSpec {
  double a = 2.504;             ///< in-plane lattice constant, A
  double c_interlayer = 3.33;   ///< layer spacing, A
  std::string stacking = "AA'";
  double radius = 20.0;         ///< bath cutoff around the defect, A
  Vec3 defect_site = Vec3::Zero();

  void validate() const;
};

struct LatticeSite {
  Vec3 position;
  Element element;
  int layer = 0;
};

/// All B and N sites within `radius`, vacancy excluded, ordered by distance from the defect.
std::vector<LatticeSite> generate_lattice_sites(const LatticeSpec& lattice);

enum class BoronIsotope { B11, B10, natural };
enum class NitrogenIsotope { N15, N14, natural };

struct IsotopeConfig {
  BoronIsotope boron = BoronIsotope::B11;
  NitrogenIsotope nitrogen = NitrogenIsotope::N15;
  std::uint64_t rng_seed = 1;
  /// 14N quadrupole constant, MHz; required whenever 14N can appear.
  std::optional<double> n14_cq;

  static constexpr double natural_b11_fraction = 0.801;
  static constexpr double natural_n14_fraction = 0.996;

  void validate() const;
};

struct HyperfineEntry {
  Vec3 position;
  Element element;
  Mat3 A;  ///< MHz, for the dataset's reference isotope of `element`
};

/// First-principles (or model) hyperfine tensors keyed by lattice site.
class HyperfineDataset {
 public:
  std::string reference_boron = "11B";
  std::string reference_nitrogen = "14N";

  void add(HyperfineEntry entry);
  std::span<const HyperfineEntry> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  /// Entry at `position` (within `tolerance` A) for `element`, or nullptr.
  const HyperfineEntry* find(const Vec3& position, Element element, double tolerance = 1e-3) const;

  /// Reads `x_ang,y_ang,z_ang,element,Axx,...,Azz`. Reference isotopes default to 11B/14N.
  static HyperfineDataset read_csv(const std::filesystem::path& path);
  void write_csv(const std::filesystem::path& path) const;

  /// Entries that do not sit on a site of `lattice` within 1e-3 A.
  std::vector<std::string> off_lattice_entries(const LatticeSpec& lattice) const;

  /// z of the layer whose tensors all have vanishing A_xz, A_yz, A_zx, A_zy.
  /// Returns nullopt when no layer or more than one layer qualifies.
  std::optional<double> detect_vacancy_layer(double tolerance = 1e-6) const;

 private:
  static std::int64_t key(double v) { return static_cast<std::int64_t>(std::llround(v * 100.0)); }
  struct KeyHash {
    std::size_t operator()(const std::tuple<std::int64_t, std::int64_t, std::int64_t>& k) const;
  };
  std::vector<HyperfineEntry> entries_;
  std::unordered_map<std::tuple<std::int64_t, std::int64_t, std::int64_t>, std::vector<std::size_t>, KeyHash>
      index_;
};

/// Point-spin-density model used to produce a synthetic hyperfine dataset when
/// the first-principles tensors are not available.
///
/// Spin density sits on three dangling-bond lobes pointing from the first-neighbor
/// nitrogens into the vacancy, with small tails on the third- and fourth-neighbor
/// nitrogens. First-neighbor tensors use the given principal values (radial,
/// tangential, out-of-plane); every other site gets the point-dipole sum over the
/// density centers plus a Fermi-contact term proportional to its own density.
struct SyntheticHyperfineModel {
  double n1_radial = 90.6;
  double n1_tangential = 46.9;
  double n1_axial = 47.14;
  double lobe_offset = 0.30;  ///< A from the first-neighbor N toward the vacancy
  double lobe_weight = 0.26;
  double n3_weight = 0.07 / 3.0;
  double n4_weight = 0.025;
};

/// Dataset covering every lattice site within `lattice.radius`, referenced to 11B and 14N.
HyperfineDataset make_synthetic_dataset(const LatticeSpec& lattice, const SyntheticHyperfineModel& model = {});

/// Bath spins within `lattice.radius`, sorted by descending hyperfine Frobenius norm.
/// Tensors are rescaled from the dataset reference isotope by the g-factor ratio.
std::vector<BathSpin> generate_bath(const LatticeSpec& lattice, const IsotopeConfig& isotopes,
                                    const HyperfineDataset& dataset);

/// Magnetic dipole-dipole tensor between two nuclei, MHz.
PairCoupling dipolar_tensor(const BathSpin& s1, const BathSpin& s2, std::size_t i = 0, std::size_t j = 1);

/// Dipolar couplings of every pair closer than `r_pair`, i < j.
std::vector<PairCoupling> pair_couplings(std::span<const BathSpin> bath, double r_pair);

/// (rank, Frobenius norm) of the `count` strongest couplings; `bath` must be sorted.
std::vector<std::pair<int, double>> hyperfine_shell_profile(std::span<const BathSpin> bath, int count);

struct HyperfineShell {
  double norm = 0.0;
  int multiplicity = 0;
  Element element;
};

/// Groups consecutive spins of the same element whose norms agree within `rel_tol`.
std::vector<HyperfineShell> hyperfine_shells(std::span<const BathSpin> bath, double rel_tol = 1e-3);

/// Uniform grid for neighbor queries over bath positions.
class NeighborGrid {
 public:
  NeighborGrid(std::span<const BathSpin> bath, double cell);
  /// Indices j with |r_j - r_i| <= radius, j != i, ascending.
  std::vector<std::size_t> within(std::size_t i, double radius) const;

 private:
  std::span<const BathSpin> bath_;
  double cell_;
  std::unordered_map<std::int64_t, std::vector<std::size_t>> cells_;
  std::int64_t cell_key(int x, int y, int z) const;
};

}  // namespace vbdecoh
