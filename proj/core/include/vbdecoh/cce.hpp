#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <vector>

#include "vbdecoh/coherence.hpp"
#include "vbdecoh/spin_model.hpp"

namespace vbdecoh {

/// Sorted set of bath indices; the order of the cluster is its size.
struct Cluster {
  std::vector<std::size_t> indices;

  Cluster() = default;
  explicit Cluster(std::vector<std::size_t> idx);
  int order() const { return static_cast<int>(indices.size()); }
  auto operator<=>(const Cluster&) const = default;
};

struct ClusterPolicy {
  int max_order = 2;
  double r_bath = 20.0;     ///< singletons within this distance of the defect, A
  double r_connect = 6.0;   ///< maximum pair distance inside a cluster, A
  double r_pair = 8.0;      ///< dipolar couplings beyond this distance are dropped, A
  std::size_t max_clusters_per_order = 0;  ///< 0 keeps every connected cluster
  bool strongest_first = true;
  long max_dim = kDefaultMaxDim;
  /// 0 propagates the mixed bath exactly; N > 0 averages N sampled pure bath
  /// states, each with the mean field of the spins outside every cluster.
  int bath_samples = 0;
  std::uint64_t sampling_seed = 1;

  void validate() const;
};

struct BathConfiguration;

/// Everything a cluster evaluation needs besides the cluster itself.
struct SystemInputs {
  CentralSpinParams central;
  std::span<const BathSpin> bath;
  MagneticField field;
  HamiltonianMode mode = HamiltonianMode::full;
  BathState bath_state;
  double r_pair = 8.0;
  long max_dim = kDefaultMaxDim;
  /// When set, spins start in these pure states and spins outside a cluster
  /// act on it through their static mean field.
  const BathConfiguration* configuration = nullptr;
};

/// One pure product state of the whole bath and the static fields it exerts.
struct BathConfiguration {
  std::vector<CVector> states;      ///< per bath spin
  std::vector<Vec3> polarization;   ///< <I> per bath spin
  Vec3 overhauser = Vec3::Zero();   ///< sum_j A_j <I_j>, MHz
  std::vector<Vec3> nuclear_field;  ///< per spin, sum_j J_ij <I_j> over pairs within r_pair
};

/// Draws every spin from the eigen-decomposition of its initial density matrix.
BathConfiguration sample_configuration(const SystemInputs& system, std::mt19937_64& rng);

/// Pair weight used to rank clusters. A dipolar coupling J counts as
/// J^2 / sqrt(J^2 + dw^2) * dA / sqrt(dA^2 + J^2): a Larmor mismatch dw freezes the
/// flip-flop, and without a hyperfine difference dA = |A_zz,i - A_zz,j| both qubit
/// branches evolve alike. The electron-mediated estimate |A_ns,i| |A_ns,j| / |D - g_e mu_B B_z|
/// is added unchanged.
class ClusterScorer {
 public:
  ClusterScorer(std::span<const BathSpin> bath, const CentralSpinParams& central, const MagneticField& field,
                HamiltonianMode mode);
  double pair_weight(std::size_t i, std::size_t j) const;
  double cluster_weight(const Cluster& c) const;

 private:
  std::span<const BathSpin> bath_;
  std::vector<double> nonsecular_;
  std::vector<double> larmor_;
  double gap_ = 1.0;
  bool mediated_ = true;
};

/// Singletons within r_bath, then connected clusters of increasing order, each
/// order optionally capped to its strongest members. Output is ordered by
/// (order, indices).
std::vector<Cluster> enumerate_clusters(std::span<const BathSpin> bath, const ClusterPolicy& policy,
                                        const ClusterScorer* scorer = nullptr);

/// Adds every proper sub-cluster of the given clusters; result sorted by (order, indices).
std::vector<Cluster> downward_closure(std::span<const Cluster> clusters);

/// Raw Hahn-echo coherence of the electron coupled to one cluster.
std::vector<cplx> hahn_echo_cluster_curve(const Cluster& cluster, const SystemInputs& system,
                                          std::span<const double> times);

/// Raw coherence of the isolated electron, l^(0)(t).
std::vector<cplx> electron_only_curve(const SystemInputs& system, std::span<const double> times);

struct ClusterContribution {
  Cluster cluster;
  std::vector<cplx> curve;
  bool degraded = false;
};

/// A denominator below kDivisionFloor is not divided by when the ratio would
/// exceed kStableRatio in magnitude or the denominator is below kNoiseFloor;
/// the previous ratio is held and the cluster is flagged degraded.
inline constexpr double kDivisionFloor = 1e-4;
inline constexpr double kStableRatio = 10.0;
inline constexpr double kNoiseFloor = 1e-12;

/// Incremental irreducible-contribution factorization. Clusters must be added
/// after all of their proper sub-clusters.
class IrreducibleFactorizer {
 public:
  explicit IrreducibleFactorizer(std::vector<cplx> l0);

  const ClusterContribution& add(const Cluster& cluster, std::span<const cplx> raw);
  const ClusterContribution* find(const Cluster& cluster) const;
  std::span<const cplx> l0() const { return l0_; }

 private:
  std::vector<cplx> l0_;
  std::map<Cluster, ClusterContribution> done_;
};

/// Irreducible contribution of `cluster` from raw curves of it and all of its
/// sub-clusters. Throws DependencyError when a sub-cluster curve is missing.
ClusterContribution irreducible_contribution(const Cluster& cluster,
                                             const std::map<Cluster, std::vector<cplx>>& raw_curves,
                                             std::span<const cplx> l0);

struct ClusterCensus {
  std::vector<std::size_t> enumerated;  ///< per order, index 0 is order 1
  std::vector<std::size_t> evaluated;   ///< after downward closure
  std::vector<std::size_t> degraded;
};

struct GcceResult {
  CoherenceCurve total;                  ///< normalized L(t)
  std::vector<CoherenceCurve> order_factors;  ///< L_n(t), n = 1..max_order
  std::vector<CoherenceCurve> cumulative;     ///< prod_{m<=n} L_m(t)
  ClusterCensus census;
  double degraded_fraction = 0.0;
  std::vector<ClusterContribution> contributions;  ///< filled when requested
};

struct GcceOptions {
  int threads = 1;
  bool keep_contributions = false;
};

/// Generalized cluster-correlation expansion of the Hahn-echo coherence.
GcceResult gcce_coherence(const SystemInputs& system, const ClusterPolicy& policy, std::span<const double> times,
                          const GcceOptions& options = {});

/// Same as above with an explicit cluster list (downward closure is applied).
GcceResult gcce_coherence(const SystemInputs& system, std::span<const Cluster> clusters,
                          std::span<const double> times, const GcceOptions& options = {});

}  // namespace vbdecoh
