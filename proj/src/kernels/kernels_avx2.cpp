// SPDX-License-Identifier: Apache-2.0
//
// AVX2+FMA lane. This TU is compiled with -mavx2 -mfma and only entered
// after a runtime CPU check, so plain intrinsics are safe here.

#include "r2s2/kernels.hpp"

#if defined(__x86_64__) || defined(__i386__)
#define R2S2_BUILD_AVX2 1
#else
#define R2S2_BUILD_AVX2 0
#endif

#if R2S2_BUILD_AVX2

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

namespace r2s2::kernels {
namespace {

void a_axpy(int64_t n, double a, const double* x, double* y) {
  __m256d va = _mm256_set1_pd(a);
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void a_scale(int64_t n, double a, double* x) {
  __m256d va = _mm256_set1_pd(a);
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= a;
}

void a_vadd(int64_t n, const double* x, const double* y, double* out) {
  int64_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) out[i] = x[i] + y[i];
}

void a_vsub(int64_t n, const double* x, const double* y, double* out) {
  int64_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) out[i] = x[i] - y[i];
}

void a_vmul(int64_t n, const double* x, const double* y, double* out) {
  int64_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) out[i] = x[i] * y[i];
}

double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

double a_dot(int64_t n, const double* x, const double* y) {
  __m256d acc = _mm256_setzero_pd();
  int64_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  double r = hsum(acc);
  for (; i < n; ++i) r += x[i] * y[i];
  return r;
}

double a_sum(int64_t n, const double* x) {
  __m256d acc = _mm256_setzero_pd();
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double r = hsum(acc);
  for (; i < n; ++i) r += x[i];
  return r;
}

double a_sumsq(int64_t n, const double* x) {
  __m256d acc = _mm256_setzero_pd();
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x + i);
    acc = _mm256_fmadd_pd(v, v, acc);
  }
  double r = hsum(acc);
  for (; i < n; ++i) r += x[i] * x[i];
  return r;
}

double a_max_abs(int64_t n, const double* x) {
  const __m256d absmask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffll));
  __m256d acc = _mm256_setzero_pd();
  int64_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_max_pd(acc, _mm256_and_pd(absmask, _mm256_loadu_pd(x + i)));
  __m128d lo = _mm256_castpd256_pd128(acc);
  __m128d hi = _mm256_extractf128_pd(acc, 1);
  lo = _mm_max_pd(lo, hi);
  double r = _mm_cvtsd_f64(_mm_max_sd(lo, _mm_unpackhi_pd(lo, lo)));
  for (; i < n; ++i) r = std::max(r, std::fabs(x[i]));
  return r;
}

void a_leaky_relu(int64_t n, double slope, const double* x, double* y) {
  __m256d vs = _mm256_set1_pd(slope);
  __m256d zero = _mm256_setzero_pd();
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x + i);
    __m256d neg = _mm256_mul_pd(vs, v);
    __m256d mask = _mm256_cmp_pd(v, zero, _CMP_GT_OQ);
    _mm256_storeu_pd(y + i, _mm256_blendv_pd(neg, v, mask));
  }
  for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : slope * x[i];
}

void a_leaky_relu_bwd(int64_t n, double slope, const double* x, const double* dy, double* dx) {
  __m256d vs = _mm256_set1_pd(slope);
  __m256d one = _mm256_set1_pd(1.0);
  __m256d zero = _mm256_setzero_pd();
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x + i);
    __m256d mask = _mm256_cmp_pd(v, zero, _CMP_GT_OQ);
    __m256d g = _mm256_blendv_pd(vs, one, mask);
    _mm256_storeu_pd(dx + i, _mm256_mul_pd(g, _mm256_loadu_pd(dy + i)));
  }
  for (; i < n; ++i) dx[i] = dy[i] * (x[i] > 0.0 ? 1.0 : slope);
}

void a_cmag(int64_t n, const double* re, const double* im, double* out) {
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d r = _mm256_loadu_pd(re + i);
    __m256d m = _mm256_loadu_pd(im + i);
    __m256d s = _mm256_fmadd_pd(r, r, _mm256_mul_pd(m, m));
    _mm256_storeu_pd(out + i, _mm256_sqrt_pd(s));
  }
  for (; i < n; ++i) out[i] = std::sqrt(re[i] * re[i] + im[i] * im[i]);
}

void a_cmag_bwd(int64_t n, const double* re, const double* im, const double* mag,
                const double* dmag, double* dre, double* dim) {
  __m256d zero = _mm256_setzero_pd();
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d m = _mm256_loadu_pd(mag + i);
    __m256d nonzero = _mm256_cmp_pd(m, zero, _CMP_NEQ_OQ);
    // Avoid 0/0: substitute 1 for zero magnitudes, then mask the result off.
    __m256d safe = _mm256_blendv_pd(_mm256_set1_pd(1.0), m, nonzero);
    __m256d s = _mm256_and_pd(_mm256_div_pd(_mm256_loadu_pd(dmag + i), safe), nonzero);
    __m256d r = _mm256_fmadd_pd(s, _mm256_loadu_pd(re + i), _mm256_loadu_pd(dre + i));
    __m256d q = _mm256_fmadd_pd(s, _mm256_loadu_pd(im + i), _mm256_loadu_pd(dim + i));
    _mm256_storeu_pd(dre + i, r);
    _mm256_storeu_pd(dim + i, q);
  }
  for (; i < n; ++i) {
    if (mag[i] == 0.0) continue;
    double s = dmag[i] / mag[i];
    dre[i] += s * re[i];
    dim[i] += s * im[i];
  }
}

void a_adam_update(int64_t n, double lr, double b1, double b2, double eps, double bc1, double bc2,
                   const double* g, double* m, double* v, double* p) {
  __m256d vb1 = _mm256_set1_pd(b1), vob1 = _mm256_set1_pd(1.0 - b1);
  __m256d vb2 = _mm256_set1_pd(b2), vob2 = _mm256_set1_pd(1.0 - b2);
  __m256d vlr = _mm256_set1_pd(lr), veps = _mm256_set1_pd(eps);
  __m256d vibc1 = _mm256_set1_pd(1.0 / bc1), vibc2 = _mm256_set1_pd(1.0 / bc2);
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vg = _mm256_loadu_pd(g + i);
    __m256d vm = _mm256_fmadd_pd(vob1, vg, _mm256_mul_pd(vb1, _mm256_loadu_pd(m + i)));
    __m256d vv =
        _mm256_fmadd_pd(vob2, _mm256_mul_pd(vg, vg), _mm256_mul_pd(vb2, _mm256_loadu_pd(v + i)));
    _mm256_storeu_pd(m + i, vm);
    _mm256_storeu_pd(v + i, vv);
    __m256d mhat = _mm256_mul_pd(vm, vibc1);
    __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(_mm256_mul_pd(vv, vibc2)), veps);
    __m256d step = _mm256_div_pd(_mm256_mul_pd(vlr, mhat), denom);
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
  }
  for (; i < n; ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
  }
}

// ---------------------------------------------------------------------------
// GEMM: packed panels + a 4x8 FMA microkernel (4 rows x 2 ymm columns).
// ---------------------------------------------------------------------------

constexpr int MR = 4;
constexpr int NR = 8;
constexpr int MC = 128;
constexpr int KC = 256;
constexpr int NC = 1024;

// Packs a MC x KC block of A (optionally transposed source) into MR-tall
// column-major strips: Ap[strip][k][mr].
template <bool TransA>
void pack_a(int mc, int kc, const double* A, int lda, int i0, int k0, double* Ap) {
  for (int i = 0; i < mc; i += MR) {
    int mr = std::min(MR, mc - i);
    for (int k = 0; k < kc; ++k) {
      for (int r = 0; r < MR; ++r) {
        double v = 0.0;
        if (r < mr) {
          int ai = i0 + i + r, ak = k0 + k;
          v = TransA ? A[static_cast<int64_t>(ak) * lda + ai]
                     : A[static_cast<int64_t>(ai) * lda + ak];
        }
        *Ap++ = v;
      }
    }
  }
}

// Packs a KC x NC block of B (optionally transposed source) into NR-wide
// row-major strips: Bp[strip][k][nr].
template <bool TransB>
void pack_b(int kc, int nc, const double* B, int ldb, int k0, int j0, double* Bp) {
  for (int j = 0; j < nc; j += NR) {
    int nr = std::min(NR, nc - j);
    for (int k = 0; k < kc; ++k) {
      for (int c = 0; c < NR; ++c) {
        double v = 0.0;
        if (c < nr) {
          int bk = k0 + k, bj = j0 + j + c;
          v = TransB ? B[static_cast<int64_t>(bj) * ldb + bk]
                     : B[static_cast<int64_t>(bk) * ldb + bj];
        }
        *Bp++ = v;
      }
    }
  }
}

// C tile (mr x nr, mr<=4, nr<=8) += alpha * Ap-strip * Bp-strip.
void microkernel(int kc, double alpha, const double* Ap, const double* Bp, double* C, int ldc,
                 int mr, int nr) {
  __m256d c00 = _mm256_setzero_pd(), c01 = _mm256_setzero_pd();
  __m256d c10 = _mm256_setzero_pd(), c11 = _mm256_setzero_pd();
  __m256d c20 = _mm256_setzero_pd(), c21 = _mm256_setzero_pd();
  __m256d c30 = _mm256_setzero_pd(), c31 = _mm256_setzero_pd();
  for (int k = 0; k < kc; ++k) {
    __m256d b0 = _mm256_loadu_pd(Bp);
    __m256d b1 = _mm256_loadu_pd(Bp + 4);
    __m256d a;
    a = _mm256_broadcast_sd(Ap + 0);
    c00 = _mm256_fmadd_pd(a, b0, c00);
    c01 = _mm256_fmadd_pd(a, b1, c01);
    a = _mm256_broadcast_sd(Ap + 1);
    c10 = _mm256_fmadd_pd(a, b0, c10);
    c11 = _mm256_fmadd_pd(a, b1, c11);
    a = _mm256_broadcast_sd(Ap + 2);
    c20 = _mm256_fmadd_pd(a, b0, c20);
    c21 = _mm256_fmadd_pd(a, b1, c21);
    a = _mm256_broadcast_sd(Ap + 3);
    c30 = _mm256_fmadd_pd(a, b0, c30);
    c31 = _mm256_fmadd_pd(a, b1, c31);
    Ap += MR;
    Bp += NR;
  }
  __m256d va = _mm256_set1_pd(alpha);
  double tile[MR * NR];
  _mm256_storeu_pd(tile + 0, _mm256_mul_pd(va, c00));
  _mm256_storeu_pd(tile + 4, _mm256_mul_pd(va, c01));
  _mm256_storeu_pd(tile + 8, _mm256_mul_pd(va, c10));
  _mm256_storeu_pd(tile + 12, _mm256_mul_pd(va, c11));
  _mm256_storeu_pd(tile + 16, _mm256_mul_pd(va, c20));
  _mm256_storeu_pd(tile + 20, _mm256_mul_pd(va, c21));
  _mm256_storeu_pd(tile + 24, _mm256_mul_pd(va, c30));
  _mm256_storeu_pd(tile + 28, _mm256_mul_pd(va, c31));
  for (int r = 0; r < mr; ++r)
    for (int c = 0; c < nr; ++c) C[static_cast<int64_t>(r) * ldc + c] += tile[r * NR + c];
}

template <bool TransA, bool TransB>
void gemm_packed(int M, int N, int K, double alpha, const double* A, int lda, const double* B,
                 int ldb, double beta, double* C, int ldc) {
  for (int i = 0; i < M; ++i) {
    double* c = C + static_cast<int64_t>(i) * ldc;
    if (beta == 0.0) {
      std::memset(c, 0, sizeof(double) * static_cast<size_t>(N));
    } else if (beta != 1.0) {
      for (int j = 0; j < N; ++j) c[j] *= beta;
    }
  }
  if (K == 0 || M == 0 || N == 0 || alpha == 0.0) return;

  std::vector<double> Ap(static_cast<size_t>(MC) * KC + MR);
  std::vector<double> Bp(static_cast<size_t>(KC) * NC + NR);

  for (int j0 = 0; j0 < N; j0 += NC) {
    int nc = std::min(NC, N - j0);
    for (int k0 = 0; k0 < K; k0 += KC) {
      int kc = std::min(KC, K - k0);
      pack_b<TransB>(kc, nc, B, ldb, k0, j0, Bp.data());
      for (int i0 = 0; i0 < M; i0 += MC) {
        int mc = std::min(MC, M - i0);
        pack_a<TransA>(mc, kc, A, lda, i0, k0, Ap.data());
        for (int jr = 0; jr < nc; jr += NR) {
          int nr = std::min(NR, nc - jr);
          const double* bstrip = Bp.data() + static_cast<int64_t>(jr / NR) * kc * NR;
          for (int ir = 0; ir < mc; ir += MR) {
            int mr = std::min(MR, mc - ir);
            const double* astrip = Ap.data() + static_cast<int64_t>(ir / MR) * kc * MR;
            microkernel(kc, alpha, astrip, bstrip,
                        C + static_cast<int64_t>(i0 + ir) * ldc + (j0 + jr), ldc, mr, nr);
          }
        }
      }
    }
  }
}

void a_gemm_nn(int M, int N, int K, double alpha, const double* A, int lda, const double* B,
               int ldb, double beta, double* C, int ldc) {
  gemm_packed<false, false>(M, N, K, alpha, A, lda, B, ldb, beta, C, ldc);
}
void a_gemm_nt(int M, int N, int K, double alpha, const double* A, int lda, const double* B,
               int ldb, double beta, double* C, int ldc) {
  gemm_packed<false, true>(M, N, K, alpha, A, lda, B, ldb, beta, C, ldc);
}
void a_gemm_tn(int M, int N, int K, double alpha, const double* A, int lda, const double* B,
               int ldb, double beta, double* C, int ldc) {
  gemm_packed<true, false>(M, N, K, alpha, A, lda, B, ldb, beta, C, ldc);
}

}  // namespace

const Ops* avx2_ops() {
  if (!__builtin_cpu_supports("avx2") || !__builtin_cpu_supports("fma")) return nullptr;
  static const Ops ops = {
      "avx2",       a_axpy,     a_scale,          a_vadd,     a_vsub,
      a_vmul,       a_dot,      a_sum,            a_sumsq,    a_max_abs,
      a_leaky_relu, a_leaky_relu_bwd,             a_cmag,     a_cmag_bwd,
      a_adam_update, a_gemm_nn, a_gemm_nt,        a_gemm_tn,
  };
  return &ops;
}

}  // namespace r2s2::kernels

#else  // !R2S2_BUILD_AVX2

namespace r2s2::kernels {
const Ops* avx2_ops() { return nullptr; }
}  // namespace r2s2::kernels

#endif
