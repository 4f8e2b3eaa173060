#include "vbdecoh/coherence.hpp"

#include <cmath>

#include "vbdecoh/errors.hpp"
#include "vbdecoh/spin_operators.hpp"

namespace vbdecoh {

CMatrix SpinInitialState::density_matrix(const SpinSpecies& species) const {
  const int d = species.dim();
  const CMatrix mixed = CMatrix::Identity(d, d) / static_cast<double>(d);
  if (kind == Kind::maximally_mixed || p == 0.0) return mixed;
  const auto I = SpinMatrices::make(species.twice_spin);
  const Vec3 n = axis.normalized();
  const CMatrix projection = n.x() * I.x + n.y() * I.y + n.z() * I.z;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(projection);
  const CVector top = es.eigenvectors().col(d - 1);
  return (1.0 - p) * mixed + p * top * top.adjoint();
}

void SpinInitialState::validate() const {
  if (kind == Kind::maximally_mixed) return;
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("polarization must lie in [0, 1]");
  if (!axis.allFinite() || axis.norm() < 1e-12) throw ValidationError("polarization axis must be a nonzero vector");
}

const SpinInitialState& BathState::of(std::size_t bath_index) const {
  auto it = overrides.find(bath_index);
  return it == overrides.end() ? default_state : it->second;
}

void BathState::validate() const {
  default_state.validate();
  for (const auto& [i, s] : overrides) s.validate();
}

std::vector<double> CoherenceCurve::magnitude() const {
  std::vector<double> out(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) out[k] = std::abs(values[k]);
  return out;
}

std::vector<double> uniform_times(double t_max, int points) {
  if (points < 2 || !(t_max > 0.0)) throw ValidationError("time grid needs >= 2 points and t_max > 0");
  std::vector<double> t(points);
  for (int k = 0; k < points; ++k) t[k] = t_max * k / (points - 1);
  return t;
}

namespace {

struct Ensemble {
  CMatrix states;  // d x K
  std::vector<double> weights;
};

Ensemble bath_ensemble(std::span<const CMatrix> bath_rho) {
  Ensemble ens{CMatrix::Ones(1, 1), {1.0}};
  for (const auto& rho : bath_rho) {
    if (!rho.isApprox(rho.adjoint(), 1e-12) || std::abs(rho.trace() - 1.0) > 1e-9)
      throw ValidationError("non-physical bath state: density matrix must be Hermitian with unit trace");
    Eigen::SelfAdjointEigenSolver<CMatrix> es(rho);
    std::vector<int> keep;
    for (int k = 0; k < rho.rows(); ++k) {
      if (es.eigenvalues()(k) < -1e-12) throw ValidationError("non-physical bath state: negative eigenvalue");
      if (es.eigenvalues()(k) > 1e-15) keep.push_back(k);
    }
    const long d_old = ens.states.rows(), k_old = ens.states.cols();
    const long d_new = rho.rows();
    Ensemble next{CMatrix::Zero(d_old * d_new, k_old * static_cast<long>(keep.size())), {}};
    next.weights.reserve(next.states.cols());
    long col = 0;
    for (long a = 0; a < k_old; ++a) {
      for (int k : keep) {
        for (long r = 0; r < d_old; ++r)
          next.states.block(r * d_new, col, d_new, 1) = ens.states(r, a) * es.eigenvectors().col(k);
        next.weights.push_back(ens.weights[a] * es.eigenvalues()(k));
        ++col;
      }
    }
    ens = std::move(next);
  }
  return ens;
}

}  // namespace

std::vector<cplx> hahn_echo_curve(const CMatrix& h, const ElectronQubit& qubit, std::span<const CMatrix> bath_rho,
                                  std::span<const double> times) {
  const Ensemble ens = bath_ensemble(bath_rho);
  const long db = ens.states.rows();
  const long n = h.rows();
  if (n != kCentralSpinDim * db) throw ValidationError("hahn_echo_curve: Hamiltonian does not match bath dimensions");

  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  const CMatrix& V = es.eigenvectors();
  const RVector& lambda = es.eigenvalues();

  // pi pulse acts on the electron factor only
  CMatrix PV = CMatrix::Zero(n, n);
  for (int e = 0; e < 3; ++e)
    for (int f = 0; f < 3; ++f)
      if (qubit.pi_pulse(e, f) != cplx(0.0)) PV.middleRows(e * db, db) += qubit.pi_pulse(e, f) * V.middleRows(f * db, db);
  const CMatrix W = V.adjoint() * PV;

  const CVector plus = (qubit.q0 + qubit.q1) / std::sqrt(2.0);
  CMatrix C = CMatrix::Zero(n, ens.states.cols());
  CMatrix Q0 = CMatrix::Zero(db, n), Q1 = CMatrix::Zero(db, n);
  for (int e = 0; e < 3; ++e) {
    const auto rows = V.middleRows(e * db, db);
    if (plus(e) != cplx(0.0)) C.noalias() += plus(e) * (rows.adjoint() * ens.states);
    Q0 += std::conj(qubit.q0(e)) * rows;
    Q1 += std::conj(qubit.q1(e)) * rows;
  }

  std::vector<cplx> out(times.size());
  CVector phase(n);
  CMatrix Y(n, C.cols()), Z(n, C.cols()), A0(db, C.cols()), A1(db, C.cols());
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double tau = 0.5 * times[k];
    for (long a = 0; a < n; ++a) {
      const double angle = -PhysicalConstants::two_pi * lambda(a) * tau;
      phase(a) = cplx(std::cos(angle), std::sin(angle));
    }
    Y.noalias() = phase.asDiagonal() * C;
    Z.noalias() = W * Y;
    Z = phase.asDiagonal() * Z;
    A0.noalias() = Q0 * Z;
    A1.noalias() = Q1 * Z;
    cplx acc = 0.0;
    for (long col = 0; col < Z.cols(); ++col) acc += ens.weights[col] * std::conj(A0.col(col).dot(A1.col(col)));
    out[k] = acc;
  }
  return out;
}

}  // namespace vbdecoh
