#pragma once

// Discrete one-dimensional model operators L = -grad(c grad) + W together with
// the factorization L = D^T diag(we) D + W that makes the quadratic-form
// identity  u^T L u = ||Du||_2^2 + ||sqrt(W) u||_2^2  hold to machine
// precision, independent of any eigensolver.
//
// Four families:
//   circle              periodic grid on [0, 2pi), closed-form spectrum for W=0
//   dirichlet_interval  zero boundary values on [x0, x1], closed form for W=0
//   divergence_form     -d/dx(c(x) d/dx) + W on an interval, c folded into D
//   harmonic_oscillator spectral coefficient space; D and X are the ladder
//                       factors of d/dx and x, so D^T D + X^T X = diag(2k+1)
//                       exactly; an eigenfunction table on a padded physical
//                       grid supplies the p != 2 norms
//
// Norm conventions: a dof vector u represents a function; ||u||_p uses the dof
// weights, gradients live on the edge (or ladder) space with its own weights.

#include <functional>
#include <string>

#include "bernlab/common.hpp"
#include "bernlab/matrix.hpp"
#include "bernlab/numerics.hpp"

namespace bernlab::models {

using numerics::EigenSystem;
using numerics::SymTridiag;

struct Grid1D {
  Vec x;  // node coordinates
  Vec w;  // node quadrature weights
  double h = 0.0;
  bool periodic = false;
  int n() const { return static_cast<int>(x.size()); }
};

enum class Kind { circle, dirichlet_interval, divergence_form, harmonic_oscillator };

struct ModelOperator {
  Kind kind;
  std::string name;

  Grid1D grid;        // physical grid (sampling grid for the oscillator)
  Vec weights;        // dof quadrature weights (all 1 in coefficient space)
  Vec potential;      // W at the dof points (grid models; empty means W == 0)

  SymTridiag tri;     // interval models: the operator matrix itself
  Vec wrap;           // circle: the two periodic couplings folded in later

  Matrix D;           // gradient factor, (edge count) x dof
  Vec edge_weights;
  Matrix X;           // oscillator only: sqrt-potential ladder factor

  Matrix sample;      // oscillator only: sample(i,k) = phi_k(x_i), n_x x K
  Matrix sample_up;   // same table extended by one mode for ladder output

  int dof() const { return static_cast<int>(weights.size()); }
  bool coefficient_space() const { return kind == Kind::harmonic_oscillator; }
  bool has_potential() const;

  // Dense operator matrix acting on dof vectors (cross-validation and the
  // periodic eigensolve; quadratic in dof count).
  Matrix dense_operator() const;

  // Full eigendecomposition; closed forms for the circle and the potential-free
  // Dirichlet interval, the tridiagonal QL solver otherwise.  `max_modes`
  // truncates the returned basis (< 0 keeps everything).
  EigenSystem eigensystem(int max_modes = -1) const;

  // Eigenvalues only (no vectors); cheap enough for large grids.
  Vec spectrum() const;

  // Weighted function-space norms of a dof vector (p in [1, inf]).
  double lp(const Vec& u, double p) const;
  double grad_lp(const Vec& u, double p) const;
  double sqrtW_lp(const Vec& u, double p) const;

  // The same norms for complex vectors given as planar re/im parts.
  double lp(const Vec& ur, const Vec& ui, double p) const;
  double grad_lp(const Vec& ur, const Vec& ui, double p) const;
  double sqrtW_lp(const Vec& ur, const Vec& ui, double p) const;

  // Values of the represented function on the physical grid (identity for
  // grid models, the eigenfunction table for the oscillator).
  Vec values_on_grid(const Vec& u) const;
};

// Periodic grid with n nodes on [0, 2pi).  An optional potential (evaluated at
// the nodes) forfeits the closed-form spectrum, so it is restricted to grids
// the dense solver can handle.
ModelOperator make_circle(int n, const std::function<double(double)>& W = {});

// Dirichlet interval: n interior nodes of [x0, x1], spacing h = (x1-x0)/(n+1).
// Boundary half-cells carry no dof; the discrete measure is n*h.
ModelOperator make_dirichlet(double x0, double x1, int n,
                             const std::function<double(double)>& W = {});

// Divergence form on a Dirichlet interval; c is evaluated at edge midpoints
// and must satisfy 0 < c_min <= c <= c_max.
ModelOperator make_divergence(double x0, double x1, int n,
                              const std::function<double(double)>& c,
                              const std::function<double(double)>& W = {});

struct OscillatorOptions {
  int grid_points = 0;   // 0: resolve the top mode's local wavelength (16 pts)
  double padding = 6.0;  // grid half-width beyond the top turning point
};

// Harmonic oscillator -d^2/dx^2 + x^2 in its eigenbasis, K retained modes.
ModelOperator make_oscillator(int K, const OscillatorOptions& opts = {});

// Orthonormal Hermite functions h_0..h_{kmax} evaluated at x (stable upward
// recurrence); row k of the result is h_k over the supplied points.
Matrix hermite_table(const Vec& x, int kmax);

}  // namespace bernlab::models
