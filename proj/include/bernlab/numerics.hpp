#pragma once

// Self-contained symmetric eigensolvers, spectral matrix functions, and
// weighted L^p -> L^q operator norms.
//
// Conventions used throughout:
//  * Grid functions carry quadrature weights w; ||f||_p = (sum_i w_i |f_i|^p)^(1/p)
//    and ||f||_inf = max_i |f_i|.
//  * An operator matrix A acts directly on grid vectors, (Af)_i = sum_j A_ij f_j,
//    i.e. quadrature factors are already folded into A.  For a kernel K the
//    matrix is A = K * diag(w).

#include <complex>
#include <functional>
#include <optional>
#include <string>

#include "bernlab/common.hpp"
#include "bernlab/matrix.hpp"

namespace bernlab::numerics {

struct SymTridiag {
  Vec diag;  // n entries
  Vec off;   // n-1 entries, off[i] couples i and i+1
  int n() const { return static_cast<int>(diag.size()); }
};

// Eigendecomposition of a nonnegative self-adjoint operator on a weighted
// grid: lambda_sq[k] ascending, vectors(i,k) = phi_k(x_i), and
// sum_i weights[i] phi_j(x_i) phi_k(x_i) = delta_jk.
struct EigenSystem {
  Vec lambda_sq;
  Matrix vectors;  // n x m, column k is phi_k
  Vec weights;

  int n() const { return vectors.rows; }
  int modes() const { return vectors.cols; }
  double lambda(int k) const { return std::sqrt(std::max(0.0, lambda_sq[k])); }
};

// Certified interval for an operator norm.  `lower` is always achieved by a
// witness vector; `upper` is a proven bound.  When the norm is computed by an
// exact formula the two coincide (up to documented solver tolerance).
struct NormBounds {
  double lower = 0.0;
  double upper = 0.0;
  std::string method;
  bool exact = false;

  double value() const { return exact ? upper : 0.5 * (lower + upper); }
};

struct EigOptions {
  bool vectors = true;
  int ql_max_iter = 60;       // per-eigenvalue implicit-shift iterations
  int jacobi_max_sweeps = 40; // full cyclic sweeps
};

struct EigResult {
  Vec values;      // ascending
  Matrix vectors;  // empty when not requested; column k matches values[k]
};

// Implicit-shift QL iteration for symmetric tridiagonal matrices, with a
// Rayleigh-quotient refinement pass so reported eigenvalues agree with the
// quadratic form of their eigenvectors to machine precision.
EigResult eig_sym_tridiag(const SymTridiag& T, const EigOptions& opts = {});

// Cyclic Jacobi for dense symmetric matrices.  The input must be symmetric to
// a relative 1e-10; the defect is reported in the error message otherwise.
EigResult eig_sym_dense(const Matrix& A, const EigOptions& opts = {});

// How to treat (numerically) zero eigenvalues when g is singular there.
enum class RangePolicy {
  none,        // g must be finite on the whole spectrum, else an error
  skip_kernel  // modes with lambda_sq <= kernel_tol are mapped to 0
};

struct FunctionOptions {
  RangePolicy range = RangePolicy::none;
  double kernel_tol = 1e-12;  // absolute threshold for "zero" eigenvalues
  // Modes with |g| below drop_tol * max_k |g| are omitted from the assembly
  // (0 keeps every mode with g != 0; exact zeros never contribute).
  double drop_tol = 0.0;
};

// g(L) = Phi diag(g(lambda^2)) Phi^T diag(w), assembled over the retained
// modes.  Exact on eigenvectors by construction.
Matrix matrix_function(const EigenSystem& E, const std::function<double(double)>& g,
                       const FunctionOptions& opts = {});
CMatrix matrix_function_c(const EigenSystem& E,
                          const std::function<std::complex<double>(double)>& g,
                          const FunctionOptions& opts = {});

// Same assembly from precomputed per-mode values (zeros are skipped; values
// must be finite).  The second form replaces Phi on the left by an arbitrary
// factor with one column per mode, yielding  left diag(symbol) Phi^T diag(w).
Matrix assemble_operator(const EigenSystem& E, const Vec& symbol,
                         double drop_tol = 0.0);
Matrix assemble_operator(const Matrix& left, const EigenSystem& E, const Vec& symbol,
                         double drop_tol = 0.0);

struct OpNormOptions {
  std::uint64_t seed = 0x5eedULL;
  int random_trials = 64;      // random unit vectors for the lower bound
  int ascent_iters = 200;      // projected-ascent refinement steps
  int power_max_iter = 2000;   // power iteration cap (2,2)
  double power_tol = 1e-13;    // relative change stopping criterion
};

// Weighted operator norm ||A||_{p->q} where A maps (grid, w_in) functions to
// (grid, w_out) functions.  Exact formulas:
//   p=1        column-wise:  max_j ||A e_j||_q / w_in_j
//   q=inf      row-wise dual norms
//   p=q=2      power iteration on the similarity diag(sqrt w_out) A diag(1/sqrt w_in)
// Other pairs with p <= q get a Riesz-Thorin upper bound interpolated from the
// exact edges and a lower bound from seeded random trials plus projected
// ascent.  p > q falls back on Hoelder embedding of the output space.
NormBounds opnorm(const Matrix& A, const Vec& w_out, const Vec& w_in, double p,
                  double q, const OpNormOptions& opts = {});

// Complex operators: |A| acts entrywise through the modulus in the exact
// formulas; iterative paths treat re/im as a stacked real operator.
NormBounds opnorm(const CMatrix& A, const Vec& w_out, const Vec& w_in, double p,
                  double q, const OpNormOptions& opts = {});

// Weighted vector norm (p in [1, inf], w ignored for p = inf).
double lp_norm(const Vec& w, const Vec& f, double p);
// Modulus norm of a complex vector given planar parts.
double lp_norm2(const Vec& w, const Vec& fre, const Vec& fim, double p);

// Maximize f over the unit Euclidean sphere by projected gradient ascent with
// backtracking.  grad(x, g_out) writes the (ambient) gradient.  Returns the
// best value; x holds the maximizer.  Deterministic given the start vector.
double sphere_ascent(Vec& x, const std::function<double(const Vec&)>& f,
                     const std::function<void(const Vec&, Vec&)>& grad,
                     int max_iters, double tol, double backtrack = 0.5);

}  // namespace bernlab::numerics
