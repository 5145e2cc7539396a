// SPDX-License-Identifier: Apache-2.0

#include "r2s2/fft.hpp"

#include <cmath>

#include "r2s2/common.hpp"

namespace r2s2 {

Dft::Dft(int n) : n_(n) {
  if (n < 1) throw ConfigError("Dft: size must be >= 1");
  twiddle_.resize(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) {
    double a = -2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n);
    twiddle_[static_cast<size_t>(k)] = {std::cos(a), std::sin(a)};
  }
  int m = n;
  for (int p = 2; p * p <= m;) {
    if (m % p == 0) {
      factors_.push_back(p);
      m /= p;
    } else {
      ++p;
    }
  }
  if (m > 1) factors_.push_back(m);
  work_.resize(static_cast<size_t>(n));
}

void Dft::forward(cdouble* x) const {
  if (n_ == 1) return;
  for (int i = 0; i < n_; ++i) work_[static_cast<size_t>(i)] = x[i];
  recurse(n_, 1, work_.data(), 1, x);
}

// Decimation in time: split into p interleaved subsequences of length m,
// transform each, then combine with root-of-unity twiddles. `twiddle_step`
// maps this level's unit root onto the table built for n_.
void Dft::recurse(int n, int twiddle_step, const cdouble* in, int stride, cdouble* out) const {
  if (n == 1) {
    out[0] = in[0];
    return;
  }
  int p = 2;
  while (n % p != 0) ++p;
  int m = n / p;
  for (int r = 0; r < p; ++r)
    recurse(m, twiddle_step * p, in + static_cast<int64_t>(r) * stride, stride * p,
            out + static_cast<int64_t>(r) * m);

  // out holds A_r[q] (r-th sub-DFT) at out[r*m + q].
  // X[q + s*m] = sum_r W^(r*(q + s*m)) * A_r[q], W = exp(-2*pi*i/n).
  cdouble tmp[64];
  std::vector<cdouble> heap_tmp;
  cdouble* t = tmp;
  if (p > 64) {
    heap_tmp.resize(static_cast<size_t>(p));
    t = heap_tmp.data();
  }
  for (int q = 0; q < m; ++q) {
    for (int r = 0; r < p; ++r) t[r] = out[static_cast<int64_t>(r) * m + q];
    for (int s = 0; s < p; ++s) {
      int k = q + s * m;
      cdouble acc = t[0];
      for (int r = 1; r < p; ++r) {
        int64_t idx = (static_cast<int64_t>(r) * k) % n;
        acc += twiddle_[static_cast<size_t>(idx * twiddle_step)] * t[r];
      }
      out[k] = acc;
    }
  }
}

}  // namespace r2s2
