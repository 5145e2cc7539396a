// SPDX-License-Identifier: Apache-2.0
//
// NEON lane for aarch64 (f64x2). NEON is baseline on aarch64 so there is no
// runtime feature probe. The GEMM family reuses the blocked scalar paths,
// which auto-vectorize well on this target.

#include "r2s2/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

#include <algorithm>
#include <cmath>

namespace r2s2::kernels {
namespace {

void n_axpy(int64_t n, double a, const double* x, double* y) {
  float64x2_t va = vdupq_n_f64(a);
  int64_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void n_scale(int64_t n, double a, double* x) {
  float64x2_t va = vdupq_n_f64(a);
  int64_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(x + i, vmulq_f64(va, vld1q_f64(x + i)));
  for (; i < n; ++i) x[i] *= a;
}

void n_vadd(int64_t n, const double* x, const double* y, double* out) {
  int64_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vaddq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
  for (; i < n; ++i) out[i] = x[i] + y[i];
}

void n_vsub(int64_t n, const double* x, const double* y, double* out) {
  int64_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vsubq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
  for (; i < n; ++i) out[i] = x[i] - y[i];
}

void n_vmul(int64_t n, const double* x, const double* y, double* out) {
  int64_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
  for (; i < n; ++i) out[i] = x[i] * y[i];
}

double n_dot(int64_t n, const double* x, const double* y) {
  float64x2_t acc = vdupq_n_f64(0.0);
  int64_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vfmaq_f64(acc, vld1q_f64(x + i), vld1q_f64(y + i));
  double r = vaddvq_f64(acc);
  for (; i < n; ++i) r += x[i] * y[i];
  return r;
}

double n_sum(int64_t n, const double* x) {
  float64x2_t acc = vdupq_n_f64(0.0);
  int64_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(x + i));
  double r = vaddvq_f64(acc);
  for (; i < n; ++i) r += x[i];
  return r;
}

double n_sumsq(int64_t n, const double* x) {
  float64x2_t acc = vdupq_n_f64(0.0);
  int64_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t v = vld1q_f64(x + i);
    acc = vfmaq_f64(acc, v, v);
  }
  double r = vaddvq_f64(acc);
  for (; i < n; ++i) r += x[i] * x[i];
  return r;
}

double n_max_abs(int64_t n, const double* x) {
  float64x2_t acc = vdupq_n_f64(0.0);
  int64_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vmaxq_f64(acc, vabsq_f64(vld1q_f64(x + i)));
  double r = vmaxvq_f64(acc);
  for (; i < n; ++i) r = std::max(r, std::fabs(x[i]));
  return r;
}

void n_leaky_relu(int64_t n, double slope, const double* x, double* y) {
  float64x2_t vs = vdupq_n_f64(slope);
  float64x2_t zero = vdupq_n_f64(0.0);
  int64_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t v = vld1q_f64(x + i);
    uint64x2_t mask = vcgtq_f64(v, zero);
    vst1q_f64(y + i, vbslq_f64(mask, v, vmulq_f64(vs, v)));
  }
  for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : slope * x[i];
}

void n_leaky_relu_bwd(int64_t n, double slope, const double* x, const double* dy, double* dx) {
  float64x2_t vs = vdupq_n_f64(slope);
  float64x2_t one = vdupq_n_f64(1.0);
  float64x2_t zero = vdupq_n_f64(0.0);
  int64_t i = 0;
  for (; i + 2 <= n; i += 2) {
    uint64x2_t mask = vcgtq_f64(vld1q_f64(x + i), zero);
    float64x2_t g = vbslq_f64(mask, one, vs);
    vst1q_f64(dx + i, vmulq_f64(g, vld1q_f64(dy + i)));
  }
  for (; i < n; ++i) dx[i] = dy[i] * (x[i] > 0.0 ? 1.0 : slope);
}

void n_cmag(int64_t n, const double* re, const double* im, double* out) {
  int64_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t r = vld1q_f64(re + i);
    float64x2_t m = vld1q_f64(im + i);
    vst1q_f64(out + i, vsqrtq_f64(vfmaq_f64(vmulq_f64(m, m), r, r)));
  }
  for (; i < n; ++i) out[i] = std::sqrt(re[i] * re[i] + im[i] * im[i]);
}

void n_cmag_bwd(int64_t n, const double* re, const double* im, const double* mag,
                const double* dmag, double* dre, double* dim) {
  for (int64_t i = 0; i < n; ++i) {
    if (mag[i] == 0.0) continue;
    double s = dmag[i] / mag[i];
    dre[i] += s * re[i];
    dim[i] += s * im[i];
  }
}

void n_adam_update(int64_t n, double lr, double b1, double b2, double eps, double bc1, double bc2,
                   const double* g, double* m, double* v, double* p) {
  float64x2_t vb1 = vdupq_n_f64(b1), vob1 = vdupq_n_f64(1.0 - b1);
  float64x2_t vb2 = vdupq_n_f64(b2), vob2 = vdupq_n_f64(1.0 - b2);
  float64x2_t vlr = vdupq_n_f64(lr), veps = vdupq_n_f64(eps);
  float64x2_t vibc1 = vdupq_n_f64(1.0 / bc1), vibc2 = vdupq_n_f64(1.0 / bc2);
  int64_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t vg = vld1q_f64(g + i);
    float64x2_t vm = vfmaq_f64(vmulq_f64(vb1, vld1q_f64(m + i)), vob1, vg);
    float64x2_t vv = vfmaq_f64(vmulq_f64(vb2, vld1q_f64(v + i)), vob2, vmulq_f64(vg, vg));
    vst1q_f64(m + i, vm);
    vst1q_f64(v + i, vv);
    float64x2_t mhat = vmulq_f64(vm, vibc1);
    float64x2_t denom = vaddq_f64(vsqrtq_f64(vmulq_f64(vv, vibc2)), veps);
    vst1q_f64(p + i, vsubq_f64(vld1q_f64(p + i), vdivq_f64(vmulq_f64(vlr, mhat), denom)));
  }
  for (; i < n; ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
  }
}

}  // namespace

const Ops* neon_ops() {
  const Ops& s = scalar_ops();
  static const Ops ops = {
      "neon",       n_axpy,     n_scale,          n_vadd,     n_vsub,
      n_vmul,       n_dot,      n_sum,            n_sumsq,    n_max_abs,
      n_leaky_relu, n_leaky_relu_bwd,             n_cmag,     n_cmag_bwd,
      n_adam_update, s.gemm_nn, s.gemm_nt,        s.gemm_tn,
  };
  return &ops;
}

}  // namespace r2s2::kernels

#else  // !defined(__aarch64__)

namespace r2s2::kernels {
const Ops* neon_ops() { return nullptr; }
}  // namespace r2s2::kernels

#endif
