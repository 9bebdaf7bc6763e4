#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <utility>

#include "bernlab/common.hpp"
#include "bernlab/matrix.hpp"
#include "bernlab/numerics.hpp"

using namespace bernlab;
using namespace bernlab::numerics;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();

SymTridiag free_laplacian(int n, double h) {
  SymTridiag T;
  T.diag.assign(n, 2.0 / (h * h));
  T.off.assign(n - 1, -1.0 / (h * h));
  return T;
}

Matrix random_symmetric(Rng& rng, int n) {
  Matrix A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) A(i, j) = A(j, i) = rng.normal();
  return A;
}

double rayleigh_defect(const SymTridiag& T, const Matrix& V, const Vec& vals) {
  double worst = 0.0;
  const int n = T.n();
  for (int k = 0; k < n; ++k) {
    double quad = 0.0, nrm = 0.0;
    for (int i = 0; i < n; ++i) {
      double tv = T.diag[i] * V(i, k);
      if (i > 0) tv += T.off[i - 1] * V(i - 1, k);
      if (i < n - 1) tv += T.off[i] * V(i + 1, k);
      quad += V(i, k) * tv;
      nrm += V(i, k) * V(i, k);
    }
    worst = std::max(worst, std::fabs(quad / nrm - vals[k]));
  }
  return worst;
}

}  // namespace

TEST_CASE("tridiagonal QL reproduces the discrete sine spectrum") {
  const int n = 50;
  const double h = 0.1;
  const auto T = free_laplacian(n, h);
  const auto res = eig_sym_tridiag(T);

  for (int k = 1; k <= n; ++k) {
    // independent oracle: eigenvalues of tridiag(-1,2,-1)/h^2 with zero ends
    const double s = std::sin(0.5 * kPi * k / (n + 1));
    const double oracle = 4.0 / (h * h) * s * s;
    CHECK(std::fabs(res.values[k - 1] - oracle) <= 1e-9 * oracle);
  }

  // eigenvectors: discrete sine modes up to sign
  for (int k = 1; k <= n; ++k) {
    const double amp = std::sqrt(2.0 / (n + 1));
    double dot = 0.0;
    for (int i = 0; i < n; ++i)
      dot += res.vectors(i, k - 1) * amp * std::sin(kPi * k * (i + 1) / (n + 1));
    CHECK(std::fabs(std::fabs(dot) - 1.0) < 1e-10);
  }

  CHECK(rayleigh_defect(T, res.vectors, res.values) <
        1e-12 * res.values.back());
}

TEST_CASE("QL eigenvalues-only mode matches the full solve") {
  const auto T = free_laplacian(120, 0.05);
  const auto full = eig_sym_tridiag(T);
  const auto vals = eig_sym_tridiag(T, {.vectors = false});
  REQUIRE(vals.values.size() == full.values.size());
  for (std::size_t k = 0; k < vals.values.size(); ++k)
    CHECK(std::fabs(vals.values[k] - full.values[k]) <=
          1e-10 * full.values.back());
  CHECK(vals.vectors.rows == 0);
}

TEST_CASE("QL recovers a synthesized spectrum") {
  // Build T = Q D Q^T implicitly: run QL on a random tridiagonal, then check
  // the decomposition reproduces the matrix and is orthonormal.
  Rng rng(42);
  SymTridiag T;
  const int n = 60;
  T.diag.resize(n);
  T.off.resize(n - 1);
  for (auto& d : T.diag) d = rng.uniform(-2.0, 2.0);
  for (auto& e : T.off) e = rng.uniform(-1.5, 1.5);
  const auto res = eig_sym_tridiag(T);

  CHECK(std::is_sorted(res.values.begin(), res.values.end()));

  // orthonormality
  for (int a = 0; a < n; a += 7)
    for (int b = a; b < n; b += 5) {
      double dot = 0.0;
      for (int i = 0; i < n; ++i) dot += res.vectors(i, a) * res.vectors(i, b);
      CHECK(std::fabs(dot - (a == b ? 1.0 : 0.0)) < 1e-11);
    }

  // reconstruction: sum_k lambda_k v_k v_k^T == T
  Matrix R(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k)
        acc += res.values[k] * res.vectors(i, k) * res.vectors(j, k);
      R(i, j) = acc;
    }
  double scale = 0.0;
  for (double v : res.values) scale = std::max(scale, std::fabs(v));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double tij = 0.0;
      if (i == j) tij = T.diag[i];
      else if (std::abs(i - j) == 1) tij = T.off[std::min(i, j)];
      CHECK(std::fabs(R(i, j) - tij) < 1e-11 * scale);
    }
}

TEST_CASE("dense Jacobi agrees with QL on a tridiagonal matrix") {
  const int n = 40;
  const auto T = free_laplacian(n, 0.2);
  Matrix A(n, n);
  for (int i = 0; i < n; ++i) {
    A(i, i) = T.diag[i];
    if (i < n - 1) A(i, i + 1) = A(i + 1, i) = T.off[i];
  }
  const auto dense = eig_sym_dense(A);
  const auto tri = eig_sym_tridiag(T);
  for (int k = 0; k < n; ++k)
    CHECK(std::fabs(dense.values[k] - tri.values[k]) <=
          1e-10 * tri.values.back());
}

TEST_CASE("dense Jacobi solves a random symmetric matrix") {
  Rng rng(9);
  const int n = 24;
  const Matrix A = random_symmetric(rng, n);
  const auto res = eig_sym_dense(A);
  double scale = 0.0;
  for (double v : res.values) scale = std::max(scale, std::fabs(v));
  // residual ||A v - lambda v||
  for (int k = 0; k < n; ++k) {
    double r2 = 0.0;
    for (int i = 0; i < n; ++i) {
      double av = 0.0;
      for (int j = 0; j < n; ++j) av += A(i, j) * res.vectors(j, k);
      const double r = av - res.values[k] * res.vectors(i, k);
      r2 += r * r;
    }
    CHECK(std::sqrt(r2) < 1e-11 * scale);
  }
}

TEST_CASE("dense Jacobi rejects asymmetric input") {
  Matrix A(3, 3);
  A(0, 1) = 1.0;
  A(1, 0) = 2.0;
  CHECK_THROWS_AS(eig_sym_dense(A), PreconditionError);
}

TEST_CASE("matrix_function with the identity map reproduces the operator") {
  const int n = 24;
  const double h = 0.3;
  const auto T = free_laplacian(n, h);
  const auto res = eig_sym_tridiag(T);

  EigenSystem E;
  E.lambda_sq = res.values;
  E.weights.assign(n, h);
  E.vectors = res.vectors;
  for (double& v : E.vectors.a) v /= std::sqrt(h);  // Euclidean -> weighted

  const Matrix M = matrix_function(E, [](double x) { return x; });
  double scale = res.values.back();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double tij = 0.0;
      if (i == j) tij = T.diag[i];
      else if (std::abs(i - j) == 1) tij = T.off[std::min(i, j)];
      CHECK(std::fabs(M(i, j) - tij) < 1e-11 * scale);
    }
}

TEST_CASE("matrix_function guards singular spectra") {
  EigenSystem E;
  E.lambda_sq = {0.0, 1.0, 4.0};
  E.weights = {1.0, 1.0, 1.0};
  E.vectors = Matrix::identity(3);

  const auto riesz = [](double x) { return 1.0 / std::sqrt(x); };
  CHECK_THROWS_AS(matrix_function(E, riesz), SingularSpectrumError);

  FunctionOptions opts;
  opts.range = RangePolicy::skip_kernel;
  const Matrix M = matrix_function(E, riesz, opts);
  CHECK(M(0, 0) == 0.0);  // kernel mode mapped to zero
  CHECK(M(1, 1) == doctest::Approx(1.0));
  CHECK(M(2, 2) == doctest::Approx(0.5));
}

TEST_CASE("complex matrix_function splits into planar parts") {
  EigenSystem E;
  E.lambda_sq = {1.0, 9.0};
  E.weights = {1.0, 1.0};
  E.vectors = Matrix::identity(2);
  const std::complex<double> z(0.25, -0.5);
  const CMatrix M = matrix_function_c(E, [&](double x) { return std::exp(-z * x); });
  for (int k = 0; k < 2; ++k) {
    const auto expect = std::exp(-z * E.lambda_sq[k]);
    CHECK(M.re(k, k) == doctest::Approx(expect.real()));
    CHECK(M.im(k, k) == doctest::Approx(expect.imag()));
  }
  CHECK(M.re(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("lp_norm matches direct sums") {
  const Vec w = {0.5, 1.0, 2.0};
  const Vec f = {-3.0, 2.0, -1.0};
  CHECK(lp_norm(w, f, 1.0) == doctest::Approx(0.5 * 3 + 1.0 * 2 + 2.0 * 1));
  CHECK(lp_norm(w, f, 2.0) ==
        doctest::Approx(std::sqrt(0.5 * 9 + 1.0 * 4 + 2.0 * 1)));
  CHECK(lp_norm(w, f, 3.0) ==
        doctest::Approx(std::cbrt(0.5 * 27 + 1.0 * 8 + 2.0 * 1)));
  CHECK(lp_norm(w, f, kInf) == 3.0);
  CHECK(lp_norm2(w, {3.0, 0.0, 0.0}, {4.0, 0.0, 0.0}, kInf) == doctest::Approx(5.0));
  CHECK(lp_norm2(w, {1.0, 1.0, 1.0}, {1.0, 1.0, 1.0}, 2.0) ==
        doctest::Approx(std::sqrt(2.0 * 3.5)));
}

// ---------------------------------------------------------------------------
// Operator norm oracles.
// ---------------------------------------------------------------------------
namespace {

struct TestOp {
  Matrix A;
  Vec w_out, w_in;
};

TestOp random_op(Rng& rng, int rows, int cols) {
  TestOp op;
  op.A = Matrix(rows, cols);
  for (auto& x : op.A.a) x = rng.normal();
  op.w_out.resize(rows);
  op.w_in.resize(cols);
  for (auto& w : op.w_out) w = rng.uniform(0.2, 2.0);
  for (auto& w : op.w_in) w = rng.uniform(0.2, 2.0);
  return op;
}

double ratio(const TestOp& op, const Vec& f, double p, double q) {
  Vec out(op.A.rows, 0.0);
  for (int i = 0; i < op.A.rows; ++i)
    for (int j = 0; j < op.A.cols; ++j) out[i] += op.A(i, j) * f[j];
  return lp_norm(op.w_out, out, q) / lp_norm(op.w_in, f, p);
}

}  // namespace

TEST_CASE("p=1 operator norms are attained at scaled deltas") {
  Rng rng(31);
  const auto op = random_op(rng, 6, 5);
  for (const double q : {1.0, 2.0, 3.0, kInf}) {
    const auto nb = opnorm(op.A, op.w_out, op.w_in, 1.0, q);
    CHECK(nb.exact);
    // oracle: try every scaled delta, none exceeds, best attains
    double best = 0.0;
    for (int j = 0; j < 5; ++j) {
      Vec f(5, 0.0);
      f[j] = 1.0;
      best = std::max(best, ratio(op, f, 1.0, q));
    }
    CHECK(best == doctest::Approx(nb.upper).epsilon(1e-12));
    // random vectors never beat it
    for (int t = 0; t < 200; ++t) {
      Vec f(5);
      for (auto& x : f) x = rng.normal();
      CHECK(ratio(op, f, 1.0, q) <= nb.upper * (1.0 + 1e-10));
    }
  }
}

TEST_CASE("q=inf operator norms are attained by the dual extremal vector") {
  Rng rng(77);
  const auto op = random_op(rng, 5, 7);
  for (const double p : {1.5, 2.0, 4.0, kInf}) {
    const auto nb = opnorm(op.A, op.w_out, op.w_in, p, kInf);
    CHECK(nb.exact);
    // construct the extremal vector for each row, verify attainment
    double best = 0.0;
    for (int i = 0; i < 5; ++i) {
      Vec f(7, 0.0);
      for (int j = 0; j < 7; ++j) {
        const double a = op.A(i, j);
        if (p == kInf) {
          f[j] = a >= 0 ? 1.0 : -1.0;
        } else {
          f[j] = std::copysign(
              std::pow(std::fabs(a) / op.w_in[j], 1.0 / (p - 1.0)), a);
        }
      }
      best = std::max(best, ratio(op, f, p, kInf));
    }
    CHECK(best == doctest::Approx(nb.upper).epsilon(1e-10));
    for (int t = 0; t < 200; ++t) {
      Vec f(7);
      for (auto& x : f) x = rng.normal();
      CHECK(ratio(op, f, p, kInf) <= nb.upper * (1.0 + 1e-10));
    }
  }
}

TEST_CASE("(2,2) norm matches a dense eigenvalue oracle") {
  Rng rng(5);
  const auto op = random_op(rng, 8, 8);
  // oracle: largest eigenvalue of B^T B with B the weighted similarity
  Matrix B(8, 8);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      B(i, j) = std::sqrt(op.w_out[i]) * op.A(i, j) / std::sqrt(op.w_in[j]);
  Matrix BtB(8, 8);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 8; ++k) acc += B(k, i) * B(k, j);
      BtB(i, j) = acc;
    }
  const auto eig = eig_sym_dense(BtB, {.vectors = false});
  const double oracle = std::sqrt(eig.values.back());

  const auto nb = opnorm(op.A, op.w_out, op.w_in, 2.0, 2.0);
  CHECK(nb.lower == doctest::Approx(oracle).epsilon(1e-7));
  CHECK(nb.upper >= oracle * (1.0 - 1e-10));
}

TEST_CASE("interior and embedding norms are exact on the identity") {
  const int n = 6;
  const Matrix I = Matrix::identity(n);
  const Vec w(n, 1.0);
  OpNormOptions opts;
  opts.random_trials = 8;

  // p <= q: the norm is 1 (deltas); interpolation and ascent must agree
  const std::pair<double, double> upper_cases[] = {{1.5, 3.0}, {2.0, 4.0}, {3.0, 3.0}};
  for (const auto& pq : upper_cases) {
    const auto nb = opnorm(I, w, w, pq.first, pq.second, opts);
    CHECK(nb.upper == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(nb.lower == doctest::Approx(1.0).epsilon(1e-7));
  }
  // p > q: the norm is n^(1/q - 1/p) (constant vector)
  const std::pair<double, double> embed_cases[] = {{3.0, 1.5}, {kInf, 2.0}, {kInf, 1.0}};
  for (const auto& pq : embed_cases) {
    const double expect =
        std::pow(double(n), 1.0 / pq.second -
                                (pq.first == kInf ? 0.0 : 1.0 / pq.first));
    const auto nb = opnorm(I, w, w, pq.first, pq.second, opts);
    CHECK(nb.upper == doctest::Approx(expect).epsilon(1e-9));
    CHECK(nb.lower == doctest::Approx(expect).epsilon(1e-7));
  }
}

TEST_CASE("interior norms bracket random-search values") {
  Rng rng(123);
  const auto op = random_op(rng, 7, 6);
  OpNormOptions opts;
  opts.random_trials = 12;
  const auto nb = opnorm(op.A, op.w_out, op.w_in, 1.5, 2.5, opts);
  CHECK(nb.lower <= nb.upper * (1.0 + 1e-12));
  double best = 0.0;
  for (int t = 0; t < 3000; ++t) {
    Vec f(6);
    for (auto& x : f) x = rng.normal();
    best = std::max(best, ratio(op, f, 1.5, 2.5));
  }
  CHECK(best <= nb.upper * (1.0 + 1e-9));
  CHECK(nb.lower >= best * 0.98);  // ascent at least matches random search
}

TEST_CASE("complex operator norms reduce to the modulus matrix") {
  // diag(i) has the same norms as the identity
  const int n = 4;
  CMatrix A;
  A.re = Matrix(n, n);
  A.im = Matrix::identity(n);
  const Vec w(n, 0.7);
  for (const double q : {1.0, 2.0, kInf}) {
    const auto nb = opnorm(A, w, w, 1.0, q);
    const double expect = (q == kInf) ? 1.0 / 0.7 : std::pow(0.7, 1.0 / q) / 0.7;
    CHECK(nb.upper == doctest::Approx(expect).epsilon(1e-12));
  }
  const auto nb22 = opnorm(A, w, w, 2.0, 2.0);
  CHECK(nb22.lower == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("opnorm validates its inputs") {
  Matrix A(2, 2);
  const Vec good = {1.0, 1.0};
  CHECK_THROWS_AS(opnorm(A, {1.0}, good, 1.0, 2.0), PreconditionError);
  CHECK_THROWS_AS(opnorm(A, good, good, 0.5, 2.0), PreconditionError);
  CHECK_THROWS_AS(opnorm(A, {1.0, -1.0}, good, 1.0, 2.0), PreconditionError);
}

TEST_CASE("sphere_ascent climbs a quadratic to its top eigenvalue") {
  Rng rng(17);
  const int n = 10;
  Matrix A = random_symmetric(rng, n);
  for (int i = 0; i < n; ++i) A(i, i) += 3.0;  // shift up a bit
  const auto eig = eig_sym_dense(A, {.vectors = false});
  const double oracle = eig.values.back();

  auto f = [&](const Vec& x) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) acc += x[i] * A(i, j) * x[j];
    return acc;
  };
  auto grad = [&](const Vec& x, Vec& g) {
    for (int i = 0; i < n; ++i) {
      g[i] = 0.0;
      for (int j = 0; j < n; ++j) g[i] += 2.0 * A(i, j) * x[j];
    }
  };
  double best = -1e300;
  for (int trial = 0; trial < 5; ++trial) {
    Vec x(n);
    for (auto& xi : x) xi = rng.normal();
    best = std::max(best, sphere_ascent(x, f, grad, 500, 1e-12));
  }
  CHECK(best == doctest::Approx(oracle).epsilon(1e-8));
}
