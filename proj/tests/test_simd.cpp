#include "doctest.h"

#include <cmath>
#include <vector>

#include "bernlab/common.hpp"
#include "bernlab/simd.hpp"

using bernlab::Rng;
using bernlab::Vec;
namespace simd = bernlab::simd;

namespace {

// Every backend the current CPU can actually run.
std::vector<std::string> usable_backends() {
  std::vector<std::string> out = {"scalar"};
  for (const char* name : {"avx2", "neon"}) {
    try {
      simd::force_backend(name);
      out.push_back(name);
    } catch (const bernlab::PreconditionError&) {
    }
  }
  simd::force_backend("auto");
  return out;
}

Vec random_vec(Rng& rng, int n) {
  Vec v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

// Odd sizes on purpose: remainders after the vector width must agree too.
const int kSizes[] = {1, 2, 3, 7, 8, 15, 16, 33, 64, 101};

bool close(double a, double b, double scale) {
  return std::fabs(a - b) <= 1e-12 * (scale + std::fabs(a) + std::fabs(b));
}

}  // namespace

TEST_CASE("dispatch reports a usable backend") {
  const auto active = simd::active_backend();
  CHECK((active == "scalar" || active == "avx2" || active == "neon"));
  CHECK_THROWS_AS(simd::force_backend("sse42"), bernlab::PreconditionError);
  simd::force_backend("auto");
}

TEST_CASE("reductions agree across backends") {
  Rng rng(123);
  for (const int n : kSizes) {
    const Vec x = random_vec(rng, n), y = random_vec(rng, n);
    Vec w = random_vec(rng, n);
    for (auto& wi : w) wi = std::fabs(wi) + 0.1;

    simd::force_backend("scalar");
    const double d0 = simd::ops().dot(x.data(), y.data(), n);
    const double a0 = simd::ops().wsum_abs(w.data(), x.data(), n);
    const double s0 = simd::ops().wsum_sq(w.data(), x.data(), n);
    const double m0 = simd::ops().max_abs(x.data(), n);

    for (const auto& b : usable_backends()) {
      simd::force_backend(b);
      CHECK_MESSAGE(close(simd::ops().dot(x.data(), y.data(), n), d0, n),
                    "dot backend=" << b << " n=" << n);
      CHECK_MESSAGE(close(simd::ops().wsum_abs(w.data(), x.data(), n), a0, n),
                    "wsum_abs backend=" << b << " n=" << n);
      CHECK_MESSAGE(close(simd::ops().wsum_sq(w.data(), x.data(), n), s0, n),
                    "wsum_sq backend=" << b << " n=" << n);
      CHECK(simd::ops().max_abs(x.data(), n) == m0);  // exact: no arithmetic
    }
  }
  simd::force_backend("auto");
}

TEST_CASE("vector updates agree across backends") {
  Rng rng(456);
  for (const int n : kSizes) {
    const Vec x = random_vec(rng, n);
    const Vec y0 = random_vec(rng, n);

    simd::force_backend("scalar");
    Vec ax = y0;
    simd::ops().axpy(n, 0.37, x.data(), ax.data());
    Vec sc = y0;
    simd::ops().scale(n, -1.83, sc.data());
    Vec rx = x, ry = y0;
    simd::ops().rot(n, rx.data(), ry.data(), 0.8, 0.6);

    for (const auto& b : usable_backends()) {
      simd::force_backend(b);
      Vec ax1 = y0;
      simd::ops().axpy(n, 0.37, x.data(), ax1.data());
      Vec sc1 = y0;
      simd::ops().scale(n, -1.83, sc1.data());
      Vec rx1 = x, ry1 = y0;
      simd::ops().rot(n, rx1.data(), ry1.data(), 0.8, 0.6);
      for (int i = 0; i < n; ++i) {
        CHECK(close(ax1[i], ax[i], 1.0));
        CHECK(close(sc1[i], sc[i], 1.0));
        CHECK(close(rx1[i], rx[i], 1.0));
        CHECK(close(ry1[i], ry[i], 1.0));
      }
    }
  }
  simd::force_backend("auto");
}

TEST_CASE("rot is an isometry") {
  Rng rng(7);
  Vec x = random_vec(rng, 40), y = random_vec(rng, 40);
  const double before = simd::ops().dot(x.data(), x.data(), 40) +
                        simd::ops().dot(y.data(), y.data(), 40);
  const double th = 0.3;
  simd::ops().rot(40, x.data(), y.data(), std::cos(th), std::sin(th));
  const double after = simd::ops().dot(x.data(), x.data(), 40) +
                       simd::ops().dot(y.data(), y.data(), 40);
  CHECK(std::fabs(before - after) < 1e-12 * before);
}

TEST_CASE("gemm_nt and matvec agree across backends") {
  Rng rng(789);
  const int shapes[][3] = {{1, 1, 1}, {3, 5, 7}, {8, 8, 8},   {13, 9, 17},
                           {16, 4, 32}, {33, 17, 5}, {40, 40, 40}};
  for (const auto& s : shapes) {
    const int m = s[0], n = s[1], k = s[2];
    const Vec A = random_vec(rng, m * k), B = random_vec(rng, n * k);
    const Vec x = random_vec(rng, k);

    simd::force_backend("scalar");
    Vec C0(m * n, 0.5);
    simd::ops().gemm_nt(m, n, k, A.data(), k, B.data(), k, C0.data(), n);
    Vec y0(m);
    simd::ops().matvec(m, k, A.data(), k, x.data(), y0.data());

    for (const auto& b : usable_backends()) {
      simd::force_backend(b);
      Vec C1(m * n, 0.5);
      simd::ops().gemm_nt(m, n, k, A.data(), k, B.data(), k, C1.data(), n);
      Vec y1(m);
      simd::ops().matvec(m, k, A.data(), k, x.data(), y1.data());
      for (int i = 0; i < m * n; ++i)
        CHECK_MESSAGE(close(C1[i], C0[i], std::sqrt(double(k))),
                      "gemm backend=" << b << " m=" << m << " n=" << n << " k=" << k);
      for (int i = 0; i < m; ++i) CHECK(close(y1[i], y0[i], std::sqrt(double(k))));
    }
  }
  simd::force_backend("auto");
}

TEST_CASE("weighted row/column reductions agree across backends") {
  Rng rng(2024);
  const int shapes[][2] = {{1, 1}, {3, 5}, {9, 13}, {16, 16}, {21, 7}, {40, 33}};
  for (const auto& s : shapes) {
    const int rows = s[0], cols = s[1];
    const Vec M = random_vec(rng, rows * cols);
    const Vec Mi = random_vec(rng, rows * cols);
    Vec w = random_vec(rng, rows);
    for (auto& wi : w) wi = std::fabs(wi) + 0.05;
    Vec wc = random_vec(rng, cols);
    for (auto& wi : wc) wi = std::fabs(wi) + 0.05;

    simd::force_backend("scalar");
    Vec cs0(cols, 0.0), cs20(cols, 0.0);
    simd::ops().abs_col_sums_w(rows, cols, M.data(), cols, w.data(), cs0.data());
    simd::ops().abs2_col_sums_w(rows, cols, M.data(), Mi.data(), cols, w.data(),
                                cs20.data());
    const double rm0 = simd::ops().abs_row_sum_max_w(rows, cols, M.data(), cols,
                                                     wc.data());
    const double rmn0 = simd::ops().abs_row_sum_max_w(rows, cols, M.data(), cols,
                                                      nullptr);
    const double rm20 = simd::ops().abs2_row_sum_max_w(rows, cols, M.data(),
                                                       Mi.data(), cols, wc.data());

    for (const auto& b : usable_backends()) {
      simd::force_backend(b);
      Vec cs1(cols, 0.0), cs21(cols, 0.0);
      simd::ops().abs_col_sums_w(rows, cols, M.data(), cols, w.data(), cs1.data());
      simd::ops().abs2_col_sums_w(rows, cols, M.data(), Mi.data(), cols, w.data(),
                                  cs21.data());
      for (int j = 0; j < cols; ++j) {
        CHECK(close(cs1[j], cs0[j], double(rows)));
        CHECK(close(cs21[j], cs20[j], double(rows)));
      }
      CHECK(close(simd::ops().abs_row_sum_max_w(rows, cols, M.data(), cols,
                                                wc.data()),
                  rm0, double(cols)));
      CHECK(close(simd::ops().abs_row_sum_max_w(rows, cols, M.data(), cols, nullptr),
                  rmn0, double(cols)));
      CHECK(close(simd::ops().abs2_row_sum_max_w(rows, cols, M.data(), Mi.data(),
                                                 cols, wc.data()),
                  rm20, double(cols)));
    }
  }
  simd::force_backend("auto");
}

TEST_CASE("environment-style override via force_backend round-trips") {
  const auto before = simd::active_backend();
  simd::force_backend("scalar");
  CHECK(simd::active_backend() == "scalar");
  simd::force_backend("auto");
  CHECK(simd::active_backend() == before);
}
