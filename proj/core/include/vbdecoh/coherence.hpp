#pragma once

#include <map>
#include <span>
#include <vector>

#include "vbdecoh/spin_model.hpp"

namespace vbdecoh {

/// Initial state of one nuclear spin.
struct SpinInitialState {
  enum class Kind { maximally_mixed, polarized };
  Kind kind = Kind::maximally_mixed;
  /// Polarization degree: rho = (1 - p) 1/d + p |m = I along axis><m = I along axis|.
  double p = 0.0;
  Vec3 axis = Vec3(0.0, 0.0, 1.0);

  static SpinInitialState mixed() { return {}; }
  static SpinInitialState polarized(double p, const Vec3& axis) { return {Kind::polarized, p, axis}; }

  CMatrix density_matrix(const SpinSpecies& species) const;
  void validate() const;
};

/// Per-spin initial bath state; spins without an override use `default_state`.
struct BathState {
  SpinInitialState default_state;
  std::map<std::size_t, SpinInitialState> overrides;  ///< keyed by bath index

  const SpinInitialState& of(std::size_t bath_index) const;
  void validate() const;
};

/// Complex coherence L(t) on a time grid in microseconds.
struct CoherenceCurve {
  std::vector<double> times;
  std::vector<cplx> values;
  bool normalized = true;
  double raw_L0_magnitude = 0.5;

  std::size_t size() const { return times.size(); }
  std::vector<double> magnitude() const;
};

/// Uniform grid of `points` samples on [0, t_max] (microseconds).
std::vector<double> uniform_times(double t_max, int points);

/// Raw Hahn-echo coherence Tr(sigma_+ rho_e(t)) for a Hamiltonian `h` over the
/// electron (most significant factor, dimension 3) and bath factors `bath_dims`.
///
/// The electron starts in (|0>_q + |1>_q)/sqrt(2) and the bath in the product of
/// `bath_rho`. Propagation is U(t/2) P U(t/2) with U from a single
/// eigendecomposition of `h`; the mixed bath is handled as an exact ensemble of
/// its eigenstates.
std::vector<cplx> hahn_echo_curve(const CMatrix& h, const ElectronQubit& qubit, std::span<const CMatrix> bath_rho,
                                  std::span<const double> times);

}  // namespace vbdecoh
