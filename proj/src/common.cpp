#include "bernlab/common.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>

#include "bernlab/matrix.hpp"
#include "bernlab/simd.hpp"

namespace bernlab {

namespace {
std::atomic<int> g_sweep_threads{1};
}  // namespace

int sweep_threads() { return g_sweep_threads.load(std::memory_order_relaxed); }

void set_sweep_threads(int n) {
  g_sweep_threads.store(std::max(1, n), std::memory_order_relaxed);
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("BERNSTEIN_LAB_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max(1, threads);
  if (threads == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::size_t nt = std::min<std::size_t>(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(nt);
  std::size_t chunk = (n + nt - 1) / nt;
  std::vector<std::exception_ptr> errors(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
    pool.emplace_back([&, t, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

Matrix mul_nt(const Matrix& A, const Matrix& B) {
  if (A.cols != B.cols)
    throw PreconditionError("mul_nt: inner dimensions differ (" +
                            std::to_string(A.cols) + " vs " + std::to_string(B.cols) + ")");
  Matrix C(A.rows, B.rows);
  simd::ops().gemm_nt(A.rows, B.rows, A.cols, A.a.data(), A.cols, B.a.data(), B.cols,
                      C.a.data(), C.cols);
  return C;
}

Matrix transpose(const Matrix& A) {
  Matrix T(A.cols, A.rows);
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < A.cols; ++j) T(j, i) = A(i, j);
  return T;
}

Matrix mul(const Matrix& A, const Matrix& B) { return mul_nt(A, transpose(B)); }

Vec matvec(const Matrix& A, const Vec& x) {
  if (static_cast<int>(x.size()) != A.cols)
    throw PreconditionError("matvec: size mismatch");
  Vec y(A.rows);
  simd::ops().matvec(A.rows, A.cols, A.a.data(), A.cols, x.data(), y.data());
  return y;
}

double max_abs_diff(const Matrix& A, const Matrix& B) {
  if (A.rows != B.rows || A.cols != B.cols)
    throw PreconditionError("max_abs_diff: shape mismatch");
  double m = 0;
  for (std::size_t i = 0; i < A.a.size(); ++i)
    m = std::max(m, std::fabs(A.a[i] - B.a[i]));
  return m;
}

}  // namespace bernlab
