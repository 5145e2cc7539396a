// SPDX-License-Identifier: Apache-2.0
//
// Reference kernels. Everything here is the semantic ground truth the SIMD
// lanes are checked against; keep these loops simple.

#include <algorithm>
#include <cmath>
#include <cstring>

#include "r2s2/kernels.hpp"

namespace r2s2::kernels {
namespace {

void s_axpy(int64_t n, double a, const double* x, double* y) {
  for (int64_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void s_scale(int64_t n, double a, double* x) {
  for (int64_t i = 0; i < n; ++i) x[i] *= a;
}

void s_vadd(int64_t n, const double* x, const double* y, double* out) {
  for (int64_t i = 0; i < n; ++i) out[i] = x[i] + y[i];
}

void s_vsub(int64_t n, const double* x, const double* y, double* out) {
  for (int64_t i = 0; i < n; ++i) out[i] = x[i] - y[i];
}

void s_vmul(int64_t n, const double* x, const double* y, double* out) {
  for (int64_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

double s_dot(int64_t n, const double* x, const double* y) {
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double s_sum(int64_t n, const double* x) {
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double s_sumsq(int64_t n, const double* x) {
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) acc += x[i] * x[i];
  return acc;
}

double s_max_abs(int64_t n, const double* x) {
  double m = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    double a = std::fabs(x[i]);
    if (a > m) m = a;
  }
  return m;
}

void s_leaky_relu(int64_t n, double slope, const double* x, double* y) {
  for (int64_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : slope * x[i];
}

void s_leaky_relu_bwd(int64_t n, double slope, const double* x, const double* dy, double* dx) {
  for (int64_t i = 0; i < n; ++i) dx[i] = dy[i] * (x[i] > 0.0 ? 1.0 : slope);
}

void s_cmag(int64_t n, const double* re, const double* im, double* out) {
  for (int64_t i = 0; i < n; ++i) out[i] = std::sqrt(re[i] * re[i] + im[i] * im[i]);
}

void s_cmag_bwd(int64_t n, const double* re, const double* im, const double* mag,
                const double* dmag, double* dre, double* dim) {
  for (int64_t i = 0; i < n; ++i) {
    if (mag[i] == 0.0) continue;  // subgradient 0 at the origin
    double s = dmag[i] / mag[i];
    dre[i] += s * re[i];
    dim[i] += s * im[i];
  }
}

void s_adam_update(int64_t n, double lr, double b1, double b2, double eps, double bc1, double bc2,
                   const double* g, double* m, double* v, double* p) {
  for (int64_t i = 0; i < n; ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
  }
}

// The fallback GEMMs pick loop orders whose inner loops are stride-1 so the
// compiler can auto-vectorize. Blocking over k keeps the C rows hot.
constexpr int kBlockK = 256;

void scale_c(int M, int N, double beta, double* C, int ldc) {
  for (int i = 0; i < M; ++i) {
    double* c = C + static_cast<int64_t>(i) * ldc;
    if (beta == 0.0) {
      std::memset(c, 0, sizeof(double) * static_cast<size_t>(N));
    } else if (beta != 1.0) {
      for (int j = 0; j < N; ++j) c[j] *= beta;
    }
  }
}

void s_gemm_nn(int M, int N, int K, double alpha, const double* A, int lda, const double* B,
               int ldb, double beta, double* C, int ldc) {
  scale_c(M, N, beta, C, ldc);
  for (int k0 = 0; k0 < K; k0 += kBlockK) {
    int k1 = std::min(K, k0 + kBlockK);
    for (int i = 0; i < M; ++i) {
      double* c = C + static_cast<int64_t>(i) * ldc;
      const double* a = A + static_cast<int64_t>(i) * lda;
      for (int k = k0; k < k1; ++k) {
        double av = alpha * a[k];
        if (av == 0.0) continue;
        const double* b = B + static_cast<int64_t>(k) * ldb;
        for (int j = 0; j < N; ++j) c[j] += av * b[j];
      }
    }
  }
}

void s_gemm_nt(int M, int N, int K, double alpha, const double* A, int lda, const double* B,
               int ldb, double beta, double* C, int ldc) {
  // C[i,j] = beta*C[i,j] + alpha * <A row i, B row j>
  for (int i = 0; i < M; ++i) {
    const double* a = A + static_cast<int64_t>(i) * lda;
    double* c = C + static_cast<int64_t>(i) * ldc;
    for (int j = 0; j < N; ++j) {
      const double* b = B + static_cast<int64_t>(j) * ldb;
      double acc = 0.0;
      for (int k = 0; k < K; ++k) acc += a[k] * b[k];
      c[j] = (beta == 0.0 ? 0.0 : beta * c[j]) + alpha * acc;
    }
  }
}

void s_gemm_tn(int M, int N, int K, double alpha, const double* A, int lda, const double* B,
               int ldb, double beta, double* C, int ldc) {
  // C[i,j] += alpha * sum_k A[k,i] * B[k,j]; k outer keeps B rows stride-1.
  scale_c(M, N, beta, C, ldc);
  for (int k = 0; k < K; ++k) {
    const double* arow = A + static_cast<int64_t>(k) * lda;
    const double* b = B + static_cast<int64_t>(k) * ldb;
    for (int i = 0; i < M; ++i) {
      double av = alpha * arow[i];
      if (av == 0.0) continue;
      double* c = C + static_cast<int64_t>(i) * ldc;
      for (int j = 0; j < N; ++j) c[j] += av * b[j];
    }
  }
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops = {
      "scalar",     s_axpy,     s_scale,          s_vadd,     s_vsub,
      s_vmul,       s_dot,      s_sum,            s_sumsq,    s_max_abs,
      s_leaky_relu, s_leaky_relu_bwd,             s_cmag,     s_cmag_bwd,
      s_adam_update, s_gemm_nn, s_gemm_nt,        s_gemm_tn,
  };
  return ops;
}

}  // namespace r2s2::kernels
