// NEON variants for aarch64.  Structurally identical to the AVX2 backend but
// with 2-wide double lanes.

#if defined(__aarch64__) && defined(__ARM_NEON)

#include <arm_neon.h>

#include <algorithm>
#include <cmath>

#include "bernlab/simd.hpp"

namespace bernlab::simd {
namespace {

inline double hsum(float64x2_t v) { return vgetq_lane_f64(v, 0) + vgetq_lane_f64(v, 1); }

void gemm_nt(int m, int n, int k, const double* A, int lda, const double* B,
             int ldb, double* C, int ldc) {
  int j2 = n - (n % 2);
  for (int i = 0; i < m; ++i) {
    const double* a = A + static_cast<std::size_t>(i) * lda;
    double* c = C + static_cast<std::size_t>(i) * ldc;
    for (int j = 0; j < j2; j += 2) {
      const double* b0 = B + static_cast<std::size_t>(j + 0) * ldb;
      const double* b1 = B + static_cast<std::size_t>(j + 1) * ldb;
      float64x2_t s0 = vdupq_n_f64(0.0), s1 = vdupq_n_f64(0.0);
      int t = 0;
      for (; t + 2 <= k; t += 2) {
        float64x2_t va = vld1q_f64(a + t);
        s0 = vfmaq_f64(s0, va, vld1q_f64(b0 + t));
        s1 = vfmaq_f64(s1, va, vld1q_f64(b1 + t));
      }
      double r0 = hsum(s0), r1 = hsum(s1);
      for (; t < k; ++t) {
        r0 += a[t] * b0[t];
        r1 += a[t] * b1[t];
      }
      c[j + 0] += r0;
      c[j + 1] += r1;
    }
    for (int j = j2; j < n; ++j) {
      const double* b = B + static_cast<std::size_t>(j) * ldb;
      double r = 0;
      for (int t = 0; t < k; ++t) r += a[t] * b[t];
      c[j] += r;
    }
  }
}

double dot(const double* x, const double* y, int n) {
  float64x2_t s = vdupq_n_f64(0.0);
  int i = 0;
  for (; i + 2 <= n; i += 2) s = vfmaq_f64(s, vld1q_f64(x + i), vld1q_f64(y + i));
  double r = hsum(s);
  for (; i < n; ++i) r += x[i] * y[i];
  return r;
}

void matvec(int m, int n, const double* M, int ldm, const double* x, double* y) {
  for (int i = 0; i < m; ++i)
    y[i] = dot(M + static_cast<std::size_t>(i) * ldm, x, n);
}

void axpy(int n, double a, const double* x, double* y) {
  float64x2_t va = vdupq_n_f64(a);
  int i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void scale(int n, double a, double* x) {
  float64x2_t va = vdupq_n_f64(a);
  int i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(x + i, vmulq_f64(va, vld1q_f64(x + i)));
  for (; i < n; ++i) x[i] *= a;
}

void rot(int n, double* x, double* y, double c, double s) {
  float64x2_t vc = vdupq_n_f64(c), vs = vdupq_n_f64(s);
  int i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t vx = vld1q_f64(x + i), vy = vld1q_f64(y + i);
    float64x2_t nx = vfmsq_f64(vmulq_f64(vc, vx), vs, vy);
    float64x2_t ny = vfmaq_f64(vmulq_f64(vc, vy), vs, vx);
    vst1q_f64(x + i, nx);
    vst1q_f64(y + i, ny);
  }
  for (; i < n; ++i) {
    double xi = x[i], yi = y[i];
    x[i] = c * xi - s * yi;
    y[i] = s * xi + c * yi;
  }
}

void abs_col_sums_w(int rows, int cols, const double* M, int ldm, const double* w,
                    double* out) {
  for (int i = 0; i < rows; ++i) {
    const double* row = M + static_cast<std::size_t>(i) * ldm;
    const double wi = w ? w[i] : 1.0;
    float64x2_t vw = vdupq_n_f64(wi);
    int j = 0;
    for (; j + 2 <= cols; j += 2) {
      float64x2_t acc = vld1q_f64(out + j);
      acc = vfmaq_f64(acc, vw, vabsq_f64(vld1q_f64(row + j)));
      vst1q_f64(out + j, acc);
    }
    for (; j < cols; ++j) out[j] += wi * std::fabs(row[j]);
  }
}

void abs2_col_sums_w(int rows, int cols, const double* Mre, const double* Mim,
                     int ldm, const double* w, double* out) {
  for (int i = 0; i < rows; ++i) {
    const double* re = Mre + static_cast<std::size_t>(i) * ldm;
    const double* im = Mim + static_cast<std::size_t>(i) * ldm;
    const double wi = w ? w[i] : 1.0;
    for (int j = 0; j < cols; ++j)
      out[j] += wi * std::sqrt(re[j] * re[j] + im[j] * im[j]);
  }
}

double abs_row_sum_max_w(int rows, int cols, const double* M, int ldm,
                         const double* w) {
  double best = 0;
  for (int i = 0; i < rows; ++i) {
    const double* row = M + static_cast<std::size_t>(i) * ldm;
    double s = 0;
    for (int j = 0; j < cols; ++j) s += (w ? w[j] : 1.0) * std::fabs(row[j]);
    best = std::max(best, s);
  }
  return best;
}

double abs2_row_sum_max_w(int rows, int cols, const double* Mre, const double* Mim,
                          int ldm, const double* w) {
  double best = 0;
  for (int i = 0; i < rows; ++i) {
    const double* re = Mre + static_cast<std::size_t>(i) * ldm;
    const double* im = Mim + static_cast<std::size_t>(i) * ldm;
    double s = 0;
    for (int j = 0; j < cols; ++j)
      s += (w ? w[j] : 1.0) * std::sqrt(re[j] * re[j] + im[j] * im[j]);
    best = std::max(best, s);
  }
  return best;
}

double wsum_abs(const double* w, const double* f, int n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  int i = 0;
  for (; i + 2 <= n; i += 2)
    acc = vfmaq_f64(acc, vld1q_f64(w + i), vabsq_f64(vld1q_f64(f + i)));
  double s = hsum(acc);
  for (; i < n; ++i) s += w[i] * std::fabs(f[i]);
  return s;
}

double wsum_sq(const double* w, const double* f, int n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  int i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t vf = vld1q_f64(f + i);
    acc = vfmaq_f64(acc, vmulq_f64(vf, vf), vld1q_f64(w + i));
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += w[i] * f[i] * f[i];
  return s;
}

double max_abs(const double* f, int n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  int i = 0;
  for (; i + 2 <= n; i += 2) acc = vmaxq_f64(acc, vabsq_f64(vld1q_f64(f + i)));
  double s = std::max(vgetq_lane_f64(acc, 0), vgetq_lane_f64(acc, 1));
  for (; i < n; ++i) s = std::max(s, std::fabs(f[i]));
  return s;
}

}  // namespace

const Ops& neon_ops() {
  static const Ops k = {
      "neon",          gemm_nt,  matvec,
      dot,             axpy,     scale,
      rot,             abs_col_sums_w, abs2_col_sums_w,
      abs_row_sum_max_w, abs2_row_sum_max_w,
      wsum_abs,        wsum_sq,  max_abs,
  };
  return k;
}

}  // namespace bernlab::simd

#endif  // aarch64 NEON
