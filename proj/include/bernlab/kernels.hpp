#pragma once

// Pointwise heat-kernel tables p_t(x, y) for the model operators, closed-form
// oscillator (Mehler) values, and the kernel-side estimates: Gaussian upper
// envelopes with ball-volume normalization, lower-envelope exponent fits
// (potential-free only), on-diagonal power fits, weighted gradient-mass
// integrals, the Gaussian mass/volume check, and the semigroup composition
// check.
//
// Tables hold kernel VALUES; the associated operator acts as k * diag(wy).
//
// Envelope conventions.  All fits normalize by the measured ball volume
//   V(x, r) = sum of quadrature weights within distance r of x,
// which equals min(2r, total length) in the flat interior and shrinks near a
// Dirichlet boundary.  Far-field table entries are pure cancellation roundoff
// (absolute size ~1e-16 regardless of the true kernel value); multiplying
// them by exp(+c d^2/t) would make every envelope constant meaningless, so
// the fits skip entries below noise_floor * max|k| and report the cutoff
// used.  Entries below the floor carry no kernel information at double
// precision.

#include <vector>

#include "bernlab/common.hpp"
#include "bernlab/matrix.hpp"
#include "bernlab/models.hpp"

namespace bernlab::kernels {

using models::ModelOperator;
using numerics::EigenSystem;

struct KernelTable {
  Vec x, wx;      // row coordinates and quadrature weights
  Vec y, wy;      // column coordinates and weights
  Matrix k;       // k(i, j) at (x_i, y_j)
  double t = 0.0;
  double period = 0.0;  // > 0: geodesic distance on a circle of this length

  double distance(int i, int j) const;
  // measured ball volume around y_j: sum of wy within distance r
  double ball_volume(int j, double r) const;
  // smallest entry (negative values flag discretization artifacts)
  double min_value() const;
  double max_on_diagonal() const;  // requires x == y geometry
};

// p_t = Phi e^{-t lambda^2} Phi^T on the model's physical grid.  For the
// oscillator an explicit evaluation grid is required (the operator lives in
// coefficient space); grid models must leave it unset.
KernelTable heat_kernel_table(const ModelOperator& M, const EigenSystem& E,
                              double t, const Vec* eval_x = nullptr);

// Intrinsic gradient of the kernel in the first argument: rows live on the
// edge grid (or on eval_x for the oscillator, via the ladder derivative).
KernelTable heat_gradient_table(const ModelOperator& M, const EigenSystem& E,
                                double t, const Vec* eval_x = nullptr);

// Closed-form oscillator kernel
//   p_t(x,y) = (2 pi sinh 2t)^(-1/2)
//              * exp( -tanh(t) (x+y)^2/4 - coth(t) (x-y)^2/4 ).
double mehler_kernel(double t, double x, double y);
KernelTable mehler_table(const Vec& x, const Vec& w, double t);

// x-derivative of the closed form,
//   grad_x p_t(x,y) = -(tanh(t) (x+y) + (x-y)/tanh(t))/2 * p_t(x,y),
// on the same grid; the truncation-free counterpart of the series gradient.
KernelTable mehler_gradient_table(const Vec& x, const Vec& w, double t);

struct GaussianFit {
  double c = 0.0;      // exponent the fit ran at
  double C = 0.0;      // smallest constant in |k| <= C V(x,sqrt t)^{-1} e^{-c d^2/t}
  int i = 0, j = 0;    // pair that forces C
  double floor = 0.0;  // absolute entry cutoff applied
  int skipped = 0;     // entries under the cutoff
};

// Smallest C with |k(x,y)| <= C * V(x, sqrt t)^{-1} * exp(-c d^2/t) over the
// informative part of the table.  Nonincreasing in c on the entries it sees.
GaussianFit gaussian_bound_fit(const KernelTable& K, double c,
                               double noise_floor = 1e-13);

struct LowerEnvelopeFit {
  double c_low = 0.0;  // smallest admissible exponent; +inf when infeasible
  int i = 0, j = 0;    // pair that forces c_low (or the failing pair)
  double floor = 0.0;
  int skipped = 0;
};

// Smallest c_low with k(x,y) >= C_trial^{-1} V(x, sqrt t)^{-1} e^{-c_low d^2/t}
// on the informative pairs.  Pairs whose value cannot meet the envelope at any
// exponent (nonpositive entries above the floor, or d = 0 entries below the
// required height) yield c_low = +inf with the failing pair recorded.  Lower
// envelopes of this kind are a potential-free statement, so models with
// W != 0 are rejected outright.
LowerEnvelopeFit liyau_lower_fit(const ModelOperator& M, const KernelTable& K,
                                 double C_trial, double noise_floor = 1e-13);

struct OnDiagonalFit {
  double m;         // fitted dimension: sup_x p_t(x,x) ~ t^(-m/2)
  double C;         // envelope constant: sup_x p_t(x,x) <= C t^(-m/2) over the sweep
  double residual;  // max log-space deviation from the fit
};

// Least-squares power fit through sup-diagonal values; needs >= 4 tables.
OnDiagonalFit on_diagonal_fit(const std::vector<KernelTable>& tables);

struct GradientMassReport {
  double integral;  // sum_i wx_i |grad_x p|^2 e^{c0 d^2/t} at column y
  double volume;    // V(y, sqrt t) on the column grid
  double ratio;     // integral * t * volume  (compares against C/(t V))
  double floor = 0.0;
  int skipped = 0;
};

// Weighted gradient mass at column y_index of a gradient table.
GradientMassReport grigoryan_integral(const KernelTable& G, int y_index,
                                      double c0, double noise_floor = 1e-13);

struct MassCheck {
  double max_ratio;  // max over y of sum_i w_i e^{-c d(x_i,y)^2/h} / V(y, sqrt h)
  double argmax_y;
};

// Volume-normalized Gaussian mass on the model's physical grid; the flat
// interior continuum value is sqrt(pi/c)/2.
MassCheck gaussian_mass_check(const ModelOperator& M, double h, double c);

// max_ij | (K_t o K_s)(i,j) - K_{t+s}(i,j) | / max |K_{t+s}|.
double chapman_kolmogorov_defect(const KernelTable& Kt, const KernelTable& Ks,
                                 const KernelTable& Kts);

}  // namespace bernlab::kernels
