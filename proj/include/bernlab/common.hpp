#pragma once

// Shared basics: error types, RNG, and a small index-deterministic parallel_for.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace bernlab {

using Vec = std::vector<double>;

// All failures are reported through exceptions carrying a human-readable
// diagnostic (indices, values, bounds).  Catch sites map them to exit codes.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid input: bad arguments, violated preconditions, malformed config.
struct PreconditionError : Error {
  using Error::Error;
};

// An iterative method exhausted its iteration cap.
struct ConvergenceError : Error {
  using Error::Error;
};

// A function of the spectrum was requested at a point where it is singular
// (e.g. inverse square root across a zero eigenvalue without range restriction).
struct SingularSpectrumError : Error {
  using Error::Error;
};

// A computed quantity failed its internal accuracy check (closed-form
// validation, quadrature mass, truncation leak).
struct AccuracyError : Error {
  using Error::Error;
};

// The requested operation is not defined for this model (e.g. a lower
// Gaussian bound fit with a nonzero potential).
struct UnsupportedError : Error {
  using Error::Error;
};

// Deterministic RNG used everywhere randomness is needed.  Seeds are always
// explicit so identical configs reproduce bit-identical runs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform(double a = 0.0, double b = 1.0) {
    return std::uniform_real_distribution<double>(a, b)(eng_);
  }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng_); }

  // Gaussian vector normalized to unit Euclidean length.
  Vec unit_vector(std::size_t dim) {
    Vec v(dim);
    double s = 0;
    for (auto& x : v) {
      x = normal();
      s += x * x;
    }
    s = s > 0 ? 1.0 / std::sqrt(s) : 0.0;
    for (auto& x : v) x *= s;
    return v;
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

// Resolve a thread-count request: n>0 means n, n==0 means the environment
// variable BERNSTEIN_LAB_THREADS if set, else hardware concurrency.
int resolve_threads(int requested);

// Thread budget consumed by the sweep loops (scans over h or t).  Defaults
// to serial; the command-line tool raises it.  Every parallel body writes to
// index-distinct slots, so the budget never changes computed values.
int sweep_threads();
void set_sweep_threads(int n);

// Runs fn(i) for i in [0,n).  Work is split into contiguous chunks, one per
// thread; results must be written to index-distinct locations so the outcome
// is identical to the serial order.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

inline double sq(double x) { return x * x; }

}  // namespace bernlab
