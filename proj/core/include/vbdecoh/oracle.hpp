#pragma once

#include <span>
#include <vector>

#include "vbdecoh/coherence.hpp"
#include "vbdecoh/spin_model.hpp"

namespace vbdecoh {

struct OracleLimit {
  long max_dim = kDefaultMaxDim;
  void validate() const;
};

struct OracleDiagnostics {
  double max_trace_error = 0.0;        ///< |Tr rho(t) - 1|
  double max_hermiticity_error = 0.0;  ///< ||rho - rho^dagger||_F
  std::vector<double> electron_purity; ///< Tr rho_e(t)^2 per time point
};

struct OracleResult {
  CoherenceCurve curve;  ///< normalized by the electron-only echo
  std::vector<cplx> raw;
  OracleDiagnostics diagnostics;
};

/// Hahn echo by brute force: the full density matrix of the electron and every
/// bath spin is propagated as U P U rho0 (U P U)^dagger and then traced over the bath.
/// All pairs in `pairs` are kept; indices refer to `spins`.
OracleResult exact_coherence(const CentralSpinParams& central, std::span<const BathSpin> spins,
                             std::span<const PairCoupling> pairs, const MagneticField& field, HamiltonianMode mode,
                             std::span<const SpinInitialState> states, std::span<const double> times,
                             const OracleLimit& limit = {});

}  // namespace vbdecoh
