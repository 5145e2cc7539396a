// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <vector>

namespace r2s2 {

using cdouble = std::complex<double>;

// Mixed-radix Cooley-Tukey DFT (forward, unscaled):
//   X[k] = sum_j x[j] * exp(-2*pi*i*j*k/n)
// Any n >= 1 works; prime factors fall back to an O(p^2) butterfly, which is
// fine at the sizes used here (48 = 2^4*3, 64, 256). Callers own scaling.
class Dft {
 public:
  explicit Dft(int n);

  int size() const { return n_; }
  void forward(cdouble* x) const;  // in place

 private:
  void recurse(int n, int twiddle_step, const cdouble* in, int stride, cdouble* out) const;

  int n_;
  std::vector<int> factors_;            // smallest-prime-first factorization
  std::vector<cdouble> twiddle_;        // exp(-2*pi*i*k/n_), k in [0, n_)
  mutable std::vector<cdouble> work_;   // scratch for the out-of-place pass
};

}  // namespace r2s2
