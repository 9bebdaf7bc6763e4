#include "doctest.h"

#include <cmath>
#include <limits>

#include "bernlab/common.hpp"
#include "bernlab/models.hpp"
#include "bernlab/numerics.hpp"

using namespace bernlab;
using namespace bernlab::models;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();

Vec random_dof(Rng& rng, int n) {
  Vec u(n);
  for (auto& x : u) x = rng.normal();
  return u;
}

// <Lu, u> in the weighted inner product, straight from the dense operator.
double quadratic_form(const ModelOperator& M, const Vec& u) {
  const Matrix A = M.dense_operator();
  double acc = 0.0;
  for (int i = 0; i < A.rows; ++i) {
    double au = 0.0;
    for (int j = 0; j < A.cols; ++j) au += A(i, j) * u[j];
    acc += M.weights[i] * u[i] * au;
  }
  return acc;
}

void check_form_identity(const ModelOperator& M, Rng& rng) {
  for (int t = 0; t < 5; ++t) {
    const Vec u = random_dof(rng, M.dof());
    const double lhs = quadratic_form(M, u);
    const double g = M.grad_lp(u, 2.0);
    const double s = M.sqrtW_lp(u, 2.0);
    const double rhs = g * g + s * s;
    CHECK(std::fabs(lhs - rhs) <= 1e-12 * (std::fabs(lhs) + std::fabs(rhs)));
  }
}

}  // namespace

TEST_CASE("energy identity holds to machine precision for every model") {
  Rng rng(11);
  check_form_identity(make_circle(64), rng);
  check_form_identity(make_circle(48, [](double x) { return 1.0 + std::sin(x) * std::sin(x); }), rng);
  check_form_identity(make_dirichlet(-4.0, 4.0, 50, [](double x) { return x * x; }), rng);
  check_form_identity(
      make_divergence(0.0, 1.0, 40,
                      [](double x) { return 1.5 + std::sin(7.0 * x); },
                      [](double x) { return std::exp(-x); }),
      rng);
  check_form_identity(make_oscillator(30), rng);
}

TEST_CASE("closed-form eigensystems reassemble the dense operator") {
  for (const auto& M : {make_circle(32), make_dirichlet(0.0, 3.0, 25)}) {
    const auto E = M.eigensystem();
    const Matrix back = numerics::matrix_function(E, [](double x) { return x; });
    const Matrix dense = M.dense_operator();
    const double scale = E.lambda_sq.back();
    CHECK(max_abs_diff(back, dense) < 1e-10 * scale);
  }
}

TEST_CASE("closed-form bases are weighted-orthonormal") {
  for (const auto& M : {make_circle(64), make_dirichlet(-1.0, 2.0, 50)}) {
    const auto E = M.eigensystem();
    const int n = E.n();
    for (int a = 0; a < n; a += 5)
      for (int b = a; b < n; b += 7) {
        double dot = 0.0;
        for (int i = 0; i < n; ++i)
          dot += E.weights[i] * E.vectors(i, a) * E.vectors(i, b);
        CHECK(std::fabs(dot - (a == b ? 1.0 : 0.0)) < 1e-12);
      }
  }
}

TEST_CASE("circle spectrum matches the dense solver when a potential is added") {
  auto W = [](double x) { return 2.0 + std::cos(x); };
  const auto M = make_circle(36, W);
  const auto E = M.eigensystem();
  // cross-check with the tridiagonal-plus-wrap dense matrix eigenvalues
  const auto dense = numerics::eig_sym_dense(M.dense_operator(), {.vectors = false});
  REQUIRE(static_cast<int>(dense.values.size()) == E.modes());
  for (int k = 0; k < E.modes(); ++k)
    CHECK(std::fabs(E.lambda_sq[k] - dense.values[k]) <=
          1e-10 * dense.values.back());
  // and the reassembly property, which also verifies the eigenvectors
  const Matrix back = numerics::matrix_function(E, [](double x) { return x; });
  CHECK(max_abs_diff(back, M.dense_operator()) < 1e-9 * dense.values.back());
}

TEST_CASE("spectrum() agrees with eigensystem().lambda_sq") {
  const auto osc = make_oscillator(12);
  const auto circ = make_circle(20);
  const auto dir = make_dirichlet(0.0, 1.0, 15, [](double x) { return x; });
  for (const ModelOperator* M : {&osc, &circ, &dir}) {
    const auto E = M->eigensystem();
    const auto s = M->spectrum();
    REQUIRE(s.size() == E.lambda_sq.size());
    for (std::size_t k = 0; k < s.size(); ++k)
      CHECK(std::fabs(s[k] - E.lambda_sq[k]) <=
            1e-9 * (std::fabs(s.back()) + 1.0));
  }
}

TEST_CASE("dirichlet eigenvalues converge to the continuum at second order") {
  // W = 0 on [0, pi]: continuum eigenvalues are k^2 exactly
  const int ks[] = {1, 2, 5};
  double err_coarse = 0.0, err_fine = 0.0;
  for (const int k : ks) {
    const auto coarse = make_dirichlet(0.0, kPi, 64).spectrum();
    const auto fine = make_dirichlet(0.0, kPi, 128).spectrum();
    err_coarse = std::max(err_coarse, std::fabs(coarse[k - 1] - double(k) * k));
    err_fine = std::max(err_fine, std::fabs(fine[k - 1] - double(k) * k));
  }
  const double order = std::log2(err_coarse / err_fine);
  CHECK(order > 1.9);
  CHECK(order < 2.2);
}

TEST_CASE("interval Schroedinger operator approaches the oscillator ladder") {
  // -u'' + x^2 u on a window wide enough to hold the low modes
  const auto M = make_dirichlet(-8.0, 8.0, 1600, [](double x) { return x * x; });
  const auto vals = M.spectrum();
  for (int k = 0; k < 10; ++k) {
    const double expect = 2.0 * k + 1.0;
    CHECK(std::fabs(vals[k] - expect) <= 5e-4 * expect);
  }
}

TEST_CASE("oscillator sampling table is orthonormal under the grid quadrature") {
  const auto M = make_oscillator(40);
  const int K = M.dof();
  const int nx = M.grid.n();
  // S^T diag(w) S == identity, up to the (superexponential) quadrature error
  for (int a = 0; a < K; a += 7)
    for (int b = a; b < K; b += 5) {
      double acc = 0.0;
      for (int i = 0; i < nx; ++i)
        acc += M.grid.w[i] * M.sample(i, a) * M.sample(i, b);
      CHECK(std::fabs(acc - (a == b ? 1.0 : 0.0)) < 1e-10);
    }
  // no visible mass at the grid ends
  CHECK(std::fabs(M.sample_up(0, K)) < 1e-12);
  CHECK(std::fabs(M.sample_up(nx - 1, K)) < 1e-12);
}

TEST_CASE("oscillator p=2 norms agree between coefficient space and the grid") {
  const auto M = make_oscillator(40);
  Rng rng(3);
  const Vec u = random_dof(rng, M.dof());
  const double coeff = M.lp(u, 2.0);
  // independent: quadrature on the sampled values
  const Vec vals = M.values_on_grid(u);
  const double sampled = numerics::lp_norm(M.grid.w, vals, 2.0);
  CHECK(coeff == doctest::Approx(sampled).epsilon(1e-10));

  const double g2 = M.grad_lp(u, 2.0);
  const double x2 = M.sqrtW_lp(u, 2.0);
  double ladder = 0.0;  // ||Du||^2 + ||Xu||^2 = sum (2k+1) u_k^2 exactly
  for (int k = 0; k < M.dof(); ++k) ladder += (2.0 * k + 1.0) * u[k] * u[k];
  CHECK(g2 * g2 + x2 * x2 == doctest::Approx(ladder).epsilon(1e-13));
}

TEST_CASE("oscillator ground-state norms match closed forms") {
  const auto M = make_oscillator(20);
  Vec e0(M.dof(), 0.0);
  e0[0] = 1.0;
  // h_0(x) = pi^(-1/4) exp(-x^2/2)
  CHECK(M.lp(e0, kInf) == doctest::Approx(std::pow(kPi, -0.25)).epsilon(1e-9));
  CHECK(M.lp(e0, 1.0) ==
        doctest::Approx(std::sqrt(2.0 * kPi) * std::pow(kPi, -0.25)).epsilon(1e-9));
  CHECK(M.lp(e0, 2.0) == doctest::Approx(1.0).epsilon(1e-12));
  // sqrt(W) h_0 in L^2: <x^2> = 1/2 in the ground state
  CHECK(M.sqrtW_lp(e0, 2.0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
}

TEST_CASE("grid norms match direct formulas") {
  const auto M = make_dirichlet(0.0, 1.0, 30, [](double x) { return 1.0 + x; });
  Rng rng(8);
  const Vec u = random_dof(rng, 30);
  const double h = M.grid.h;

  double s1 = 0.0, smax = 0.0;
  for (int i = 0; i < 30; ++i) {
    s1 += h * std::fabs(u[i]);
    smax = std::max(smax, std::fabs(u[i]));
  }
  CHECK(M.lp(u, 1.0) == doctest::Approx(s1).epsilon(1e-13));
  CHECK(M.lp(u, kInf) == doctest::Approx(smax).epsilon(1e-13));

  double g1 = 0.0;  // forward differences with zero boundary extension
  for (int e = 0; e <= 30; ++e) {
    const double lo = (e - 1 >= 0) ? u[e - 1] : 0.0;
    const double hi = (e <= 29) ? u[e] : 0.0;
    g1 += h * std::fabs((hi - lo) / h);
  }
  CHECK(M.grad_lp(u, 1.0) == doctest::Approx(g1).epsilon(1e-13));

  double w2 = 0.0;
  for (int i = 0; i < 30; ++i)
    w2 += h * (1.0 + M.grid.x[i]) * u[i] * u[i];
  CHECK(M.sqrtW_lp(u, 2.0) == doctest::Approx(std::sqrt(w2)).epsilon(1e-13));
}

TEST_CASE("complex norms reduce to the modulus") {
  const auto M = make_circle(16);
  Rng rng(4);
  const Vec ur = random_dof(rng, 16), ui = random_dof(rng, 16);
  Vec mod(16);
  for (int i = 0; i < 16; ++i) mod[i] = std::hypot(ur[i], ui[i]);
  for (const double p : {1.0, 2.0, 3.0, kInf})
    CHECK(M.lp(ur, ui, p) == doctest::Approx(numerics::lp_norm(M.weights, mod, p)));
}

TEST_CASE("a constant-coefficient divergence model is the plain Laplacian") {
  const auto A = make_divergence(0.0, 2.0, 20, [](double) { return 1.0; });
  const auto B = make_dirichlet(0.0, 2.0, 20);
  CHECK(max_abs_diff(A.dense_operator(), B.dense_operator()) < 1e-12 / A.grid.h);
  CHECK(max_abs_diff(A.D, B.D) < 1e-14 / A.grid.h);
}

TEST_CASE("builders validate their inputs") {
  CHECK_THROWS_AS(make_circle(2), PreconditionError);
  CHECK_THROWS_AS(make_dirichlet(1.0, 0.0, 10), PreconditionError);
  CHECK_THROWS_AS(make_dirichlet(0.0, 1.0, 10, [](double) { return -1.0; }),
                  PreconditionError);
  CHECK_THROWS_AS(
      make_divergence(0.0, 1.0, 10, [](double) { return 0.0; }),
      PreconditionError);
  CHECK_THROWS_AS(make_oscillator(0), PreconditionError);
  // dense periodic solves are gated on grid size
  const auto big = make_circle(1024, [](double) { return 1.0; });
  CHECK_THROWS_AS(big.eigensystem(), PreconditionError);
}

TEST_CASE("eigensystem truncation keeps the leading modes") {
  const auto M = make_circle(24);
  const auto full = M.eigensystem();
  const auto part = M.eigensystem(7);
  CHECK(part.modes() == 7);
  CHECK(part.n() == 24);
  for (int k = 0; k < 7; ++k) {
    CHECK(part.lambda_sq[k] == full.lambda_sq[k]);
    for (int i = 0; i < 24; ++i) CHECK(part.vectors(i, k) == full.vectors(i, k));
  }
}
