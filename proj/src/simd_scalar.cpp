#include <algorithm>
#include <cmath>

#include "bernlab/simd.hpp"

// Scalar reference kernels.  These define the semantics the vector backends
// must reproduce (up to floating-point reassociation).

namespace bernlab::simd {
namespace {

void gemm_nt(int m, int n, int k, const double* A, int lda, const double* B,
             int ldb, double* C, int ldc) {
  for (int i = 0; i < m; ++i) {
    const double* a = A + static_cast<std::size_t>(i) * lda;
    double* c = C + static_cast<std::size_t>(i) * ldc;
    for (int j = 0; j < n; ++j) {
      const double* b = B + static_cast<std::size_t>(j) * ldb;
      double s = 0;
      for (int t = 0; t < k; ++t) s += a[t] * b[t];
      c[j] += s;
    }
  }
}

void matvec(int m, int n, const double* M, int ldm, const double* x, double* y) {
  for (int i = 0; i < m; ++i) {
    const double* row = M + static_cast<std::size_t>(i) * ldm;
    double s = 0;
    for (int j = 0; j < n; ++j) s += row[j] * x[j];
    y[i] = s;
  }
}

double dot(const double* x, const double* y, int n) {
  double s = 0;
  for (int i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy(int n, double a, const double* x, double* y) {
  for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale(int n, double a, double* x) {
  for (int i = 0; i < n; ++i) x[i] *= a;
}

void rot(int n, double* x, double* y, double c, double s) {
  for (int i = 0; i < n; ++i) {
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
    for (int j = 0; j < cols; ++j) out[j] += wi * std::fabs(row[j]);
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
    if (w) {
      for (int j = 0; j < cols; ++j) s += w[j] * std::fabs(row[j]);
    } else {
      for (int j = 0; j < cols; ++j) s += std::fabs(row[j]);
    }
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
    for (int j = 0; j < cols; ++j) {
      double m = std::sqrt(re[j] * re[j] + im[j] * im[j]);
      s += (w ? w[j] : 1.0) * m;
    }
    best = std::max(best, s);
  }
  return best;
}

double wsum_abs(const double* w, const double* f, int n) {
  double s = 0;
  for (int i = 0; i < n; ++i) s += w[i] * std::fabs(f[i]);
  return s;
}

double wsum_sq(const double* w, const double* f, int n) {
  double s = 0;
  for (int i = 0; i < n; ++i) s += w[i] * f[i] * f[i];
  return s;
}

double max_abs(const double* f, int n) {
  double s = 0;
  for (int i = 0; i < n; ++i) s = std::max(s, std::fabs(f[i]));
  return s;
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops k = {
      "scalar",        gemm_nt,  matvec,
      dot,             axpy,     scale,
      rot,             abs_col_sums_w, abs2_col_sums_w,
      abs_row_sum_max_w, abs2_row_sum_max_w,
      wsum_abs,        wsum_sq,  max_abs,
  };
  return k;
}

}  // namespace bernlab::simd
