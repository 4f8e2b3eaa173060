#include "vbdecoh/spin_operators.hpp"

#include <cmath>

#include "vbdecoh/errors.hpp"

namespace vbdecoh {

SpinMatrices SpinMatrices::make(int twice_spin) {
  if (twice_spin < 1) throw ValidationError("spin must be at least 1/2");
  const int d = twice_spin + 1;
  const double s = 0.5 * twice_spin;
  SpinMatrices out;
  out.dim = d;
  out.z = CMatrix::Zero(d, d);
  out.plus = CMatrix::Zero(d, d);
  for (int k = 0; k < d; ++k) {
    const double m = s - k;
    out.z(k, k) = m;
    // <m+1| S+ |m> lives at row k-1, column k
    if (k > 0) out.plus(k - 1, k) = std::sqrt(s * (s + 1.0) - m * (m + 1.0));
  }
  out.minus = out.plus.adjoint();
  out.x = 0.5 * (out.plus + out.minus);
  out.y = cplx(0.0, -0.5) * (out.plus - out.minus);
  return out;
}

const CMatrix& SpinMatrices::component(int axis) const {
  switch (axis) {
    case 0: return x;
    case 1: return y;
    default: return z;
  }
}

ProductSpace::ProductSpace(std::vector<int> dims) : dims_(std::move(dims)) {
  strides_.assign(dims_.size(), 1);
  for (int s = static_cast<int>(dims_.size()) - 1; s >= 0; --s) {
    strides_[s] = total_;
    total_ *= dims_[s];
  }
}

void ProductSpace::add_local(CMatrix& h, int site, const CMatrix& op, cplx coeff) const {
  const long stride = strides_[site];
  const int d = dims_[site];
  for (long row = 0; row < total_; ++row) {
    const int digit = static_cast<int>((row / stride) % d);
    const long base = row - digit * stride;
    for (int k = 0; k < d; ++k) {
      const cplx v = op(digit, k);
      if (v != cplx(0.0)) h(row, base + k * stride) += coeff * v;
    }
  }
}

void ProductSpace::add_product(CMatrix& h, int site_a, const CMatrix& op_a, int site_b,
                               const CMatrix& op_b, cplx coeff) const {
  const long sa = strides_[site_a], sb = strides_[site_b];
  const int da = dims_[site_a], db = dims_[site_b];
  for (long row = 0; row < total_; ++row) {
    const int ra = static_cast<int>((row / sa) % da);
    const int rb = static_cast<int>((row / sb) % db);
    const long base = row - ra * sa - rb * sb;
    for (int ka = 0; ka < da; ++ka) {
      const cplx va = op_a(ra, ka);
      if (va == cplx(0.0)) continue;
      for (int kb = 0; kb < db; ++kb) {
        const cplx vb = op_b(rb, kb);
        if (vb != cplx(0.0)) h(row, base + ka * sa + kb * sb) += coeff * va * vb;
      }
    }
  }
}

CMatrix ProductSpace::embed(int site, const CMatrix& op) const {
  CMatrix out = CMatrix::Zero(total_, total_);
  add_local(out, site, op);
  return out;
}

}  // namespace vbdecoh
