#pragma once

// Functional calculus for the model operators: spectral multipliers psi(hL),
// real- and complex-time heat operators, and the independent synthesis route
// that writes psi(hL) as a weighted superposition of complex-time heat
// operators,
//
//   psi(hL) = (2*pi)^(-1/2) * integral  hat{psi_e}(xi) e^{-(2 - i xi) h L} dxi,
//   psi_e(x) = psi(x) e^{2x},
//
// which only makes sense when psi_e has an integrable Fourier transform, i.e.
// for multipliers that decay (here: compactly supported bumps and cutoffs
// that vanish beyond a point).  Comparing the two routes bounds the quadrature
// and tail error of the representation, not just roundoff.

#include <complex>
#include <string>
#include <vector>

#include "bernlab/common.hpp"
#include "bernlab/matrix.hpp"
#include "bernlab/models.hpp"
#include "bernlab/numerics.hpp"

namespace bernlab::calculus {

using models::ModelOperator;
using numerics::EigenSystem;
using numerics::NormBounds;

enum class Family { bump, smooth_cutoff, tail_step, power_decay };

// Scalar multiplier profiles on [0, inf) (extended smoothly to x < 0 where the
// Fourier representation needs it).  All smooth pieces use the same
// second-order Gevrey bridge, so Fourier transforms decay like
// exp(-c |xi|^(2/3)).
struct MultiplierSpec {
  Family family = Family::bump;
  double center = 1.0;  // bump
  double radius = 0.5;  // bump
  double beta = 1.0;    // power_decay exponent

  static MultiplierSpec bump(double center, double radius);
  static MultiplierSpec smooth_cutoff();  // 1 on x<=1, 0 on x>=2
  static MultiplierSpec tail_step();      // 0 on x<=1/2, 1 on x>=1
  static MultiplierSpec power_decay(double beta);  // x^beta e^{-x}

  double operator()(double x) const;
  std::string name() const;

  // psi_e = psi * e^{2x} integrable (bump, smooth_cutoff): eligible for the
  // Fourier-heat synthesis route.
  bool fourier_representable() const;
  // psi(x)/sqrt(x) bounded near 0: required by the reverse-inequality scans.
  bool vanishes_near_zero() const;
  // tabulation window for psi_e (families with fourier_representable only)
  double table_lo() const;
  double table_hi() const;
};

// hat{psi_e} sampled on the quadrature grid xi = -xi_max .. xi_max step dxi,
// plus a one-octave continuation used for the tail estimate.  Tables are
// memoized per (spec, options).
struct FourierOptions {
  double xi_max = 40.0;
  double dxi = 0.05;
};

struct FourierTable {
  Vec xi;        // quadrature nodes
  Vec re, im;    // hat{psi_e}(xi)
  double tail;   // (2 pi)^(-1/2) * integral_{xi_max < |xi| <= 2 xi_max} |hat{psi_e}|
};

const FourierTable& fourier_table(const MultiplierSpec& psi,
                                  const FourierOptions& opts = {});

// Per-mode symbol values psi(h * lambda_k^2).
Vec multiplier_symbol(const EigenSystem& E, const MultiplierSpec& psi, double h);

// Direct spectral route: psi(hL) as an operator on dof vectors.
Matrix spectral_multiplier(const EigenSystem& E, const MultiplierSpec& psi, double h);

// e^{-tL} (t >= 0) and e^{-zL} (Re z >= 0, else PreconditionError).
Matrix heat_operator(const EigenSystem& E, double t);
CMatrix heat_operator(const EigenSystem& E, std::complex<double> z);

struct FourierRoute {
  Matrix op;             // real part of the synthesized multiplier
  Vec symbol;            // per-mode real values the synthesis produced
  double imag_residual;  // max_k |Im symbol_k|; cancels to roundoff exactly
  double tail_estimate;  // operator-norm bound for the truncated |xi| > xi_max part
};

// Independent synthesis of psi(hL) through complex-time heat operators.
// Throws UnsupportedError when psi_e is not integrable (tail_step,
// power_decay).
FourierRoute multiplier_via_fourier_heat(const EigenSystem& E,
                                         const MultiplierSpec& psi, double h,
                                         const FourierOptions& opts = {});

// D * g(L) assembled in one pass (no intermediate n^2 product); `symbol` holds
// g at each retained mode, zeros are skipped.
Matrix gradient_of_operator(const ModelOperator& M, const EigenSystem& E,
                            const Vec& symbol);

// Both first-order factors applied to an assembled multiplier matrix:
// {D * Mpsi, diag(sqrt W) * Mpsi}.  The second factor is zero when W == 0.
std::pair<Matrix, Matrix> gradient_of_multiplier(const ModelOperator& M,
                                                 const Matrix& Mpsi);

enum class RieszFactor { gradient, potential };

// Riesz-type factor D L^{-1/2} (or diag(sqrt W) L^{-1/2}).  Kernel modes are
// projected out when restrict_kernel is set; otherwise a singular bottom mode
// raises SingularSpectrumError.
Matrix riesz_transform(const ModelOperator& M, const EigenSystem& E,
                       RieszFactor which = RieszFactor::gradient,
                       bool restrict_kernel = true);

struct UniformityReport {
  std::vector<NormBounds> per_h;
  double sup = 0.0;       // largest per-h value over the sweep
  double argmax_h = 0.0;  // h attaining it
};

// ||psi(hL)||_{p->p} for each h in hs (uniform boundedness scans).
UniformityReport uniformity_scan(const ModelOperator& M, const EigenSystem& E,
                                 const MultiplierSpec& psi, const Vec& hs,
                                 double p,
                                 const numerics::OpNormOptions& opts = {});

// ||e^{-zL}||_{p->q} along a list of complex times (sector scans).
std::vector<NormBounds> holomorphic_norm_scan(const ModelOperator& M,
                                              const EigenSystem& E,
                                              const std::vector<std::complex<double>>& zs,
                                              double p, double q,
                                              const numerics::OpNormOptions& opts = {});

struct RayScan {
  std::vector<NormBounds> per_t;
  double fitted_c = 0.0;  // max over the sweep of value / sec(theta)^(|1/2-1/q|+1/2)
};

// ||e^{-zL}||_{q->q} along the ray z = t e^{i theta}, |theta| < pi/2, with the
// sector-growth constant fitted against sec(theta)^(|1/2-1/q|+1/2).
RayScan holomorphic_ray_scan(const ModelOperator& M, const EigenSystem& E,
                             double theta, double q, const Vec& ts,
                             const numerics::OpNormOptions& opts = {});

}  // namespace bernlab::calculus
