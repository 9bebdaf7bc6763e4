#pragma once

// Dense row-major matrices.  Complex matrices are stored as planar re/im
// pairs, which keeps the hot kernels purely real.

#include <complex>
#include <vector>

#include "bernlab/common.hpp"

namespace bernlab {

struct Matrix {
  int rows = 0, cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
  double* row(int i) { return a.data() + static_cast<std::size_t>(i) * cols; }
  const double* row(int i) const { return a.data() + static_cast<std::size_t>(i) * cols; }

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
};

struct CMatrix {
  Matrix re, im;

  CMatrix() = default;
  CMatrix(int r, int c) : re(r, c), im(r, c) {}
  int rows() const { return re.rows; }
  int cols() const { return re.cols; }
  std::complex<double> at(int i, int j) const { return {re(i, j), im(i, j)}; }
};

// C = A * B^T  (A: m x k, B: n x k, both row-major).
Matrix mul_nt(const Matrix& A, const Matrix& B);

// C = A * B.
Matrix mul(const Matrix& A, const Matrix& B);

Matrix transpose(const Matrix& A);

Vec matvec(const Matrix& A, const Vec& x);

// max_ij |A_ij - B_ij|
double max_abs_diff(const Matrix& A, const Matrix& B);

}  // namespace bernlab
