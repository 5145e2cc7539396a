// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace r2s2::kernels {

// Flat table of the arithmetic inner loops everything else is built on.
// Scalar entries are the reference semantics; SIMD variants must agree with
// them to rounding (see tests/test_kernels.cpp for the equivalence suite).
struct Ops {
  const char* name;

  // y[i] += a * x[i]
  void (*axpy)(int64_t n, double a, const double* x, double* y);
  // x[i] *= a
  void (*scale)(int64_t n, double a, double* x);
  void (*vadd)(int64_t n, const double* x, const double* y, double* out);
  void (*vsub)(int64_t n, const double* x, const double* y, double* out);
  void (*vmul)(int64_t n, const double* x, const double* y, double* out);
  double (*dot)(int64_t n, const double* x, const double* y);
  double (*sum)(int64_t n, const double* x);
  double (*sumsq)(int64_t n, const double* x);
  double (*max_abs)(int64_t n, const double* x);

  void (*leaky_relu)(int64_t n, double slope, const double* x, double* y);
  // dx[i] = dy[i] * (x[i] > 0 ? 1 : slope)
  void (*leaky_relu_bwd)(int64_t n, double slope, const double* x, const double* dy, double* dx);

  // out[i] = sqrt(re[i]^2 + im[i]^2)
  void (*cmag)(int64_t n, const double* re, const double* im, double* out);
  // dre[i] += dmag[i]*re[i]/mag[i] (0 where mag == 0), same for dim
  void (*cmag_bwd)(int64_t n, const double* re, const double* im, const double* mag,
                   const double* dmag, double* dre, double* dim);

  // Bias-corrected Adam step on a parameter block.
  // m = b1*m + (1-b1)*g; v = b2*v + (1-b2)*g^2;
  // p -= lr * (m/bc1) / (sqrt(v/bc2) + eps)
  void (*adam_update)(int64_t n, double lr, double b1, double b2, double eps, double bc1,
                      double bc2, const double* g, double* m, double* v, double* p);

  // Row-major GEMM family. C is M x N with leading dimension ldc.
  //   nn: C = beta*C + alpha * A(MxK,lda) * B(KxN,ldb)
  //   nt: C = beta*C + alpha * A(MxK,lda) * B(NxK,ldb)^T
  //   tn: C = beta*C + alpha * A(KxM,lda)^T * B(KxN,ldb)
  void (*gemm_nn)(int M, int N, int K, double alpha, const double* A, int lda, const double* B,
                  int ldb, double beta, double* C, int ldc);
  void (*gemm_nt)(int M, int N, int K, double alpha, const double* A, int lda, const double* B,
                  int ldb, double beta, double* C, int ldc);
  void (*gemm_tn)(int M, int N, int K, double alpha, const double* A, int lda, const double* B,
                  int ldb, double beta, double* C, int ldc);
};

const Ops& scalar_ops();
// Null when the build or the running CPU lacks the extension.
const Ops* avx2_ops();
const Ops* neon_ops();

// Runtime-selected table: AVX2 when the CPU supports it, NEON on aarch64,
// scalar otherwise. R2S2_KERNELS=scalar|avx2|neon|auto overrides.
const Ops& active();

// Test hook; pass "auto" to restore detection. Throws ConfigError for an
// unavailable lane.
void force(const char* which);

}  // namespace r2s2::kernels
