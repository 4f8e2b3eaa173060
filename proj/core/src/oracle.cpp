#include "vbdecoh/oracle.hpp"

#include <cmath>

#include "vbdecoh/errors.hpp"

namespace vbdecoh {

void OracleLimit::validate() const {
  if (max_dim < kCentralSpinDim) throw ValidationError("oracle max_dim must be at least 3");
}

namespace {

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (long i = 0; i < a.rows(); ++i)
    for (long j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

std::vector<cplx> propagate(const CMatrix& h, const ElectronQubit& qubit, const CMatrix& rho_bath,
                            std::span<const double> times, OracleDiagnostics* diag) {
  const long db = rho_bath.rows();
  const long n = h.rows();
  const CVector plus = (qubit.q0 + qubit.q1) / std::sqrt(2.0);
  const CMatrix rho0 = kron(plus * plus.adjoint(), rho_bath);
  const CMatrix pulse = kron(qubit.pi_pulse, CMatrix::Identity(db, db));

  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  const CMatrix& V = es.eigenvectors();
  std::vector<cplx> out;
  out.reserve(times.size());
  CVector phase(n);
  for (double t : times) {
    for (long a = 0; a < n; ++a) phase(a) = std::exp(cplx(0.0, -PhysicalConstants::two_pi * es.eigenvalues()(a) * 0.5 * t));
    const CMatrix U = V * phase.asDiagonal() * V.adjoint();
    const CMatrix M = U * pulse * U;
    const CMatrix rho = M * rho0 * M.adjoint();
    CMatrix rho_e = CMatrix::Zero(3, 3);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) rho_e(a, b) = rho.block(a * db, b * db, db, db).trace();
    out.push_back(qubit.q0.dot(rho_e * qubit.q1));
    if (diag) {
      diag->max_trace_error = std::max(diag->max_trace_error, std::abs(rho.trace() - 1.0));
      diag->max_hermiticity_error = std::max(diag->max_hermiticity_error, (rho - rho.adjoint()).norm());
      diag->electron_purity.push_back((rho_e * rho_e).trace().real());
    }
  }
  return out;
}

}  // namespace

OracleResult exact_coherence(const CentralSpinParams& central, std::span<const BathSpin> spins,
                             std::span<const PairCoupling> pairs, const MagneticField& field, HamiltonianMode mode,
                             std::span<const SpinInitialState> states, std::span<const double> times,
                             const OracleLimit& limit) {
  limit.validate();
  if (states.size() != spins.size()) throw ValidationError("oracle needs one initial state per bath spin");
  const CMatrix h = build_cluster_hamiltonian(central, spins, pairs, field, mode, HamiltonianOptions{limit.max_dim});
  const ElectronQubit qubit = electron_qubit(central, field);

  CMatrix rho_bath = CMatrix::Ones(1, 1);
  for (std::size_t k = 0; k < spins.size(); ++k) {
    states[k].validate();
    rho_bath = kron(rho_bath, states[k].density_matrix(spins[k].species));
  }

  OracleResult result;
  result.raw = propagate(h, qubit, rho_bath, times, &result.diagnostics);
  const auto l0 = propagate(electron_hamiltonian(central, field), qubit, CMatrix::Ones(1, 1), times, nullptr);
  result.curve.times.assign(times.begin(), times.end());
  result.curve.values.resize(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) result.curve.values[k] = result.raw[k] / l0[k];
  result.curve.normalized = true;
  result.curve.raw_L0_magnitude = l0.empty() ? 0.0 : std::abs(l0.front());
  return result;
}

}  // namespace vbdecoh
