#pragma once

// Runtime-dispatched vector kernels.  Every routine has a scalar reference
// implementation; on x86 an AVX2+FMA variant is selected when the CPU supports
// it, on aarch64 a NEON variant.  The active backend can be forced with
// force_backend() or the BERNSTEIN_LAB_SIMD environment variable
// ("scalar", "avx2", "neon", "auto"), which the equivalence tests use to run
// the same inputs through both paths.

#include <cstddef>
#include <string>

namespace bernlab::simd {

struct Ops {
  const char* name;

  // C (m x n, row-major, ldc) += A (m x k, lda) * B^T (B is n x k, ldb).
  // Both inputs are row-major with the contraction running along contiguous
  // rows, which is the layout produced by eigenvector tables.
  void (*gemm_nt)(int m, int n, int k, const double* A, int lda, const double* B,
                  int ldb, double* C, int ldc);

  // y (m) = M (m x n, ldm) * x (n)
  void (*matvec)(int m, int n, const double* M, int ldm, const double* x, double* y);

  double (*dot)(const double* x, const double* y, int n);
  void (*axpy)(int n, double a, const double* x, double* y);  // y += a*x
  void (*scale)(int n, double a, double* x);

  // Plane rotation: (x_i, y_i) <- (c*x_i - s*y_i, s*x_i + c*y_i).
  void (*rot)(int n, double* x, double* y, double c, double s);

  // out[j] += sum_i w[i] * |M[i][j]|   (column sums of absolute values)
  void (*abs_col_sums_w)(int rows, int cols, const double* M, int ldm,
                         const double* w, double* out);
  // Complex variant on planar re/im storage: |.| is the modulus.
  void (*abs2_col_sums_w)(int rows, int cols, const double* Mre, const double* Mim,
                          int ldm, const double* w, double* out);

  // max_i sum_j w[j] * |M[i][j]|   (w == nullptr means weights of 1)
  double (*abs_row_sum_max_w)(int rows, int cols, const double* M, int ldm,
                              const double* w);
  double (*abs2_row_sum_max_w)(int rows, int cols, const double* Mre,
                               const double* Mim, int ldm, const double* w);

  double (*wsum_abs)(const double* w, const double* f, int n);  // sum w|f|
  double (*wsum_sq)(const double* w, const double* f, int n);   // sum w f^2
  double (*max_abs)(const double* f, int n);
};

// The backend chosen for this process (env override applied on first call).
const Ops& ops();

// Force a specific backend ("auto" restores CPU detection).  Throws
// PreconditionError if the backend is unknown or unsupported on this CPU.
void force_backend(const std::string& name);

std::string active_backend();

// Reference implementation, always available (used by equivalence tests).
const Ops& scalar_ops();

}  // namespace bernlab::simd
