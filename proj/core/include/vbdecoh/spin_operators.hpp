#pragma once

#include <span>
#include <vector>

#include "vbdecoh/linalg.hpp"

namespace vbdecoh {

/// Angular momentum matrices for a single spin in the |m = s, s-1, ..., -s> basis.
struct SpinMatrices {
  int dim = 0;
  CMatrix x, y, z, plus, minus;

  /// `twice_spin` is 2s, so spin-1/2 is 1 and spin-1 is 2.
  static SpinMatrices make(int twice_spin);

  const CMatrix& component(int axis) const;
  /// Magnetic quantum number of basis state `k`.
  double m(int k) const { return 0.5 * (dim - 1) - k; }
};

/// Product Hilbert space of several spins; site 0 is the most significant index.
class ProductSpace {
 public:
  explicit ProductSpace(std::vector<int> dims);

  int sites() const { return static_cast<int>(dims_.size()); }
  int dim(int site) const { return dims_[site]; }
  long total() const { return total_; }
  std::span<const int> dims() const { return dims_; }

  /// H += coeff * (op on `site`).
  void add_local(CMatrix& h, int site, const CMatrix& op, cplx coeff = 1.0) const;

  /// H += coeff * (op_a on `site_a`) (op_b on `site_b`), site_a != site_b.
  void add_product(CMatrix& h, int site_a, const CMatrix& op_a, int site_b, const CMatrix& op_b,
                   cplx coeff = 1.0) const;

  /// Full-space matrix of a single-site operator.
  CMatrix embed(int site, const CMatrix& op) const;

 private:
  std::vector<int> dims_;
  std::vector<long> strides_;
  long total_ = 1;
};

}  // namespace vbdecoh
