// AVX2 + FMA variants of the vector kernels.  This translation unit is only
// compiled on x86-64 (with -mavx2 -mfma); dispatch checks CPU support at
// runtime before selecting it.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "bernlab/simd.hpp"

namespace bernlab::simd {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

inline __m256d vabs(__m256d v) {
  const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  return _mm256_and_pd(v, mask);
}

// C += A * B^T with a 4-column block of B held in registers; the contraction
// axis is contiguous in both A and B.
void gemm_nt(int m, int n, int k, const double* A, int lda, const double* B,
             int ldb, double* C, int ldc) {
  int j4 = n - (n % 4);
  for (int i = 0; i < m; ++i) {
    const double* a = A + static_cast<std::size_t>(i) * lda;
    double* c = C + static_cast<std::size_t>(i) * ldc;
    for (int j = 0; j < j4; j += 4) {
      const double* b0 = B + static_cast<std::size_t>(j + 0) * ldb;
      const double* b1 = B + static_cast<std::size_t>(j + 1) * ldb;
      const double* b2 = B + static_cast<std::size_t>(j + 2) * ldb;
      const double* b3 = B + static_cast<std::size_t>(j + 3) * ldb;
      __m256d s0 = _mm256_setzero_pd();
      __m256d s1 = _mm256_setzero_pd();
      __m256d s2 = _mm256_setzero_pd();
      __m256d s3 = _mm256_setzero_pd();
      int t = 0;
      for (; t + 4 <= k; t += 4) {
        __m256d va = _mm256_loadu_pd(a + t);
        s0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b0 + t), s0);
        s1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b1 + t), s1);
        s2 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b2 + t), s2);
        s3 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b3 + t), s3);
      }
      double r0 = hsum(s0), r1 = hsum(s1), r2 = hsum(s2), r3 = hsum(s3);
      for (; t < k; ++t) {
        r0 += a[t] * b0[t];
        r1 += a[t] * b1[t];
        r2 += a[t] * b2[t];
        r3 += a[t] * b3[t];
      }
      c[j + 0] += r0;
      c[j + 1] += r1;
      c[j + 2] += r2;
      c[j + 3] += r3;
    }
    for (int j = j4; j < n; ++j) {
      const double* b = B + static_cast<std::size_t>(j) * ldb;
      __m256d s = _mm256_setzero_pd();
      int t = 0;
      for (; t + 4 <= k; t += 4)
        s = _mm256_fmadd_pd(_mm256_loadu_pd(a + t), _mm256_loadu_pd(b + t), s);
      double r = hsum(s);
      for (; t < k; ++t) r += a[t] * b[t];
      c[j] += r;
    }
  }
}

double dot(const double* x, const double* y, int n) {
  __m256d s = _mm256_setzero_pd();
  int i = 0;
  for (; i + 4 <= n; i += 4)
    s = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), s);
  double r = hsum(s);
  for (; i < n; ++i) r += x[i] * y[i];
  return r;
}

void matvec(int m, int n, const double* M, int ldm, const double* x, double* y) {
  for (int i = 0; i < m; ++i)
    y[i] = dot(M + static_cast<std::size_t>(i) * ldm, x, n);
}

void axpy(int n, double a, const double* x, double* y) {
  __m256d va = _mm256_set1_pd(a);
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void scale(int n, double a, double* x) {
  __m256d va = _mm256_set1_pd(a);
  int i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= a;
}

void rot(int n, double* x, double* y, double c, double s) {
  __m256d vc = _mm256_set1_pd(c), vs = _mm256_set1_pd(s);
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vx = _mm256_loadu_pd(x + i);
    __m256d vy = _mm256_loadu_pd(y + i);
    __m256d nx = _mm256_fmsub_pd(vc, vx, _mm256_mul_pd(vs, vy));
    __m256d ny = _mm256_fmadd_pd(vs, vx, _mm256_mul_pd(vc, vy));
    _mm256_storeu_pd(x + i, nx);
    _mm256_storeu_pd(y + i, ny);
  }
  for (; i < n; ++i) {
    double xi = x[i], yi = y[i];
    x[i] = c * xi - s * yi;
    y[i] = s * xi + c * yi;
  }
}

void abs_col_sums_w(int rows, int cols, const double* M, int ldm, const double* w,
                    double* out) {
  int j4 = cols - (cols % 4);
  for (int i = 0; i < rows; ++i) {
    const double* row = M + static_cast<std::size_t>(i) * ldm;
    const double wi = w ? w[i] : 1.0;
    __m256d vw = _mm256_set1_pd(wi);
    int j = 0;
    for (; j < j4; j += 4) {
      __m256d acc = _mm256_loadu_pd(out + j);
      acc = _mm256_fmadd_pd(vw, vabs(_mm256_loadu_pd(row + j)), acc);
      _mm256_storeu_pd(out + j, acc);
    }
    for (; j < cols; ++j) out[j] += wi * std::fabs(row[j]);
  }
}

void abs2_col_sums_w(int rows, int cols, const double* Mre, const double* Mim,
                     int ldm, const double* w, double* out) {
  int j4 = cols - (cols % 4);
  for (int i = 0; i < rows; ++i) {
    const double* re = Mre + static_cast<std::size_t>(i) * ldm;
    const double* im = Mim + static_cast<std::size_t>(i) * ldm;
    const double wi = w ? w[i] : 1.0;
    __m256d vw = _mm256_set1_pd(wi);
    int j = 0;
    for (; j < j4; j += 4) {
      __m256d vr = _mm256_loadu_pd(re + j);
      __m256d vi = _mm256_loadu_pd(im + j);
      __m256d mod = _mm256_sqrt_pd(_mm256_fmadd_pd(vr, vr, _mm256_mul_pd(vi, vi)));
      __m256d acc = _mm256_loadu_pd(out + j);
      _mm256_storeu_pd(out + j, _mm256_fmadd_pd(vw, mod, acc));
    }
    for (; j < cols; ++j)
      out[j] += wi * std::sqrt(re[j] * re[j] + im[j] * im[j]);
  }
}

double abs_row_sum_max_w(int rows, int cols, const double* M, int ldm,
                         const double* w) {
  double best = 0;
  for (int i = 0; i < rows; ++i) {
    const double* row = M + static_cast<std::size_t>(i) * ldm;
    __m256d acc = _mm256_setzero_pd();
    int j = 0;
    if (w) {
      for (; j + 4 <= cols; j += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + j), vabs(_mm256_loadu_pd(row + j)), acc);
    } else {
      for (; j + 4 <= cols; j += 4)
        acc = _mm256_add_pd(acc, vabs(_mm256_loadu_pd(row + j)));
    }
    double s = hsum(acc);
    for (; j < cols; ++j) s += (w ? w[j] : 1.0) * std::fabs(row[j]);
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
    __m256d acc = _mm256_setzero_pd();
    int j = 0;
    for (; j + 4 <= cols; j += 4) {
      __m256d vr = _mm256_loadu_pd(re + j);
      __m256d vi = _mm256_loadu_pd(im + j);
      __m256d mod = _mm256_sqrt_pd(_mm256_fmadd_pd(vr, vr, _mm256_mul_pd(vi, vi)));
      if (w) mod = _mm256_mul_pd(mod, _mm256_loadu_pd(w + j));
      acc = _mm256_add_pd(acc, mod);
    }
    double s = hsum(acc);
    for (; j < cols; ++j)
      s += (w ? w[j] : 1.0) * std::sqrt(re[j] * re[j] + im[j] * im[j]);
    best = std::max(best, s);
  }
  return best;
}

double wsum_abs(const double* w, const double* f, int n) {
  __m256d acc = _mm256_setzero_pd();
  int i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), vabs(_mm256_loadu_pd(f + i)), acc);
  double s = hsum(acc);
  for (; i < n; ++i) s += w[i] * std::fabs(f[i]);
  return s;
}

double wsum_sq(const double* w, const double* f, int n) {
  __m256d acc = _mm256_setzero_pd();
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vf = _mm256_loadu_pd(f + i);
    acc = _mm256_fmadd_pd(_mm256_mul_pd(vf, vf), _mm256_loadu_pd(w + i), acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += w[i] * f[i] * f[i];
  return s;
}

double max_abs(const double* f, int n) {
  __m256d acc = _mm256_setzero_pd();
  int i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_max_pd(acc, vabs(_mm256_loadu_pd(f + i)));
  double lanes[4];
  _mm256_storeu_pd(lanes, acc);
  double s = std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
  for (; i < n; ++i) s = std::max(s, std::fabs(f[i]));
  return s;
}

}  // namespace

const Ops& avx2_ops() {
  static const Ops k = {
      "avx2",          gemm_nt,  matvec,
      dot,             axpy,     scale,
      rot,             abs_col_sums_w, abs2_col_sums_w,
      abs_row_sum_max_w, abs2_row_sum_max_w,
      wsum_abs,        wsum_sq,  max_abs,
  };
  return k;
}

}  // namespace bernlab::simd

#endif  // x86-64
