#include "bernlab/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>

#include "bernlab/simd.hpp"

namespace bernlab::calculus {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSqrt2Pi = 2.50662827463100050242;

// Gevrey bridge kernel: flat to all orders at u = 0, transform decay
// exp(-c |xi|^(2/3)).
double gevrey(double u) { return u > 0.0 ? std::exp(-1.0 / (u * u)) : 0.0; }

void require(bool ok, const std::string& what) {
  if (!ok) throw PreconditionError(what);
}

}  // namespace

// ---------------------------------------------------------------------------
// Multiplier profiles.
// ---------------------------------------------------------------------------
MultiplierSpec MultiplierSpec::bump(double center, double radius) {
  if (!(radius > 0.0)) throw PreconditionError("bump: radius must be positive");
  MultiplierSpec s;
  s.family = Family::bump;
  s.center = center;
  s.radius = radius;
  return s;
}

MultiplierSpec MultiplierSpec::smooth_cutoff() {
  MultiplierSpec s;
  s.family = Family::smooth_cutoff;
  return s;
}

MultiplierSpec MultiplierSpec::tail_step() {
  MultiplierSpec s;
  s.family = Family::tail_step;
  return s;
}

MultiplierSpec MultiplierSpec::power_decay(double beta) {
  if (!(beta >= 0.0)) throw PreconditionError("power_decay: beta must be >= 0");
  MultiplierSpec s;
  s.family = Family::power_decay;
  s.beta = beta;
  return s;
}

double MultiplierSpec::operator()(double x) const {
  switch (family) {
    case Family::bump: {
      const double t = (x - center) / radius;
      const double d = 1.0 - t * t;
      if (!(d > 0.0)) return 0.0;
      return std::exp(1.0 - 1.0 / (d * d));
    }
    case Family::smooth_cutoff: {
      if (x <= 1.0) return 1.0;
      if (x >= 2.0) return 0.0;
      const double a = gevrey(2.0 - x), b = gevrey(x - 1.0);
      return a / (a + b);
    }
    case Family::tail_step: {
      if (x <= 0.5) return 0.0;
      if (x >= 1.0) return 1.0;
      const double a = gevrey(x - 0.5), b = gevrey(1.0 - x);
      return a / (a + b);
    }
    case Family::power_decay:
      if (x <= 0.0) return beta == 0.0 ? 1.0 : 0.0;
      return std::pow(x, beta) * std::exp(-x);
  }
  return 0.0;
}

std::string MultiplierSpec::name() const {
  char buf[64];
  switch (family) {
    case Family::bump:
      std::snprintf(buf, sizeof buf, "bump(%.6g,%.6g)", center, radius);
      return buf;
    case Family::smooth_cutoff:
      return "smooth_cutoff";
    case Family::tail_step:
      return "tail_step";
    case Family::power_decay:
      std::snprintf(buf, sizeof buf, "power_decay(%.6g)", beta);
      return buf;
  }
  return "?";
}

bool MultiplierSpec::fourier_representable() const {
  return family == Family::bump || family == Family::smooth_cutoff;
}

bool MultiplierSpec::vanishes_near_zero() const {
  switch (family) {
    case Family::bump:
      return center - radius >= 0.0;
    case Family::smooth_cutoff:
      return false;  // equals 1 at 0
    case Family::tail_step:
      return true;
    case Family::power_decay:
      return beta > 0.5;
  }
  return false;
}

double MultiplierSpec::table_lo() const {
  if (family == Family::bump) return center - radius;
  if (family == Family::smooth_cutoff) return -21.0;  // e^{2x} mass ~ 1e-19 here
  throw UnsupportedError("no psi_e table for multiplier " + name());
}

double MultiplierSpec::table_hi() const {
  if (family == Family::bump) return center + radius;
  if (family == Family::smooth_cutoff) return 2.0;
  throw UnsupportedError("no psi_e table for multiplier " + name());
}

// ---------------------------------------------------------------------------
// hat{psi_e} tables.
// ---------------------------------------------------------------------------
namespace {

// hat{f}(xi) = (2 pi)^(-1/2) * integral f(x) e^{-i xi x} dx by trapezoid on the
// tabulation window; the integrand vanishes (to double precision) at both ends
// for every representable family, so the rule is effectively spectral here.
void transform_at(const Vec& x, const Vec& fe, double dx, double xi, double* out_re,
                  double* out_im) {
  const int nx = static_cast<int>(x.size());
  double sr = 0.0, si = 0.0;
  double c = 0.0, s = 0.0;
  const double cd = std::cos(xi * dx), sd = std::sin(xi * dx);
  for (int k = 0; k < nx; ++k) {
    if (k % 64 == 0) {  // re-sync the recurrence against accumulated drift
      c = std::cos(xi * x[k]);
      s = std::sin(xi * x[k]);
    }
    const double wk = (k == 0 || k == nx - 1) ? 0.5 * dx : dx;
    sr += wk * fe[k] * c;
    si -= wk * fe[k] * s;
    const double cn = c * cd - s * sd;  // advance e^{i xi x} by one step
    s = s * cd + c * sd;
    c = cn;
  }
  *out_re = sr / kSqrt2Pi;
  *out_im = si / kSqrt2Pi;
}

std::map<std::string, FourierTable>& table_cache() {
  static std::map<std::string, FourierTable> cache;
  return cache;
}
std::mutex table_mutex;

}  // namespace

const FourierTable& fourier_table(const MultiplierSpec& psi,
                                  const FourierOptions& opts) {
  if (!psi.fourier_representable()) {
    throw UnsupportedError("multiplier " + psi.name() +
                           " has no integrable psi_e; the Fourier-heat route "
                           "needs a decaying profile");
  }
  require(opts.xi_max > 0.0 && opts.dxi > 0.0,
          "fourier_table: xi_max and dxi must be positive");
  const double steps = opts.xi_max / opts.dxi;
  require(std::fabs(steps - std::llround(steps)) < 1e-9,
          "fourier_table: xi_max must be an integer multiple of dxi");

  char key[128];
  std::snprintf(key, sizeof key, "%s|%.12g|%.12g", psi.name().c_str(), opts.xi_max,
                opts.dxi);

  std::lock_guard<std::mutex> lock(table_mutex);
  auto& cache = table_cache();
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  const double lo = psi.table_lo(), hi = psi.table_hi();
  const double dx_target = kPi / (16.0 * opts.xi_max);
  const int nx = static_cast<int>(std::ceil((hi - lo) / dx_target)) + 1;
  const double dx = (hi - lo) / (nx - 1);
  Vec x(nx), fe(nx);
  for (int k = 0; k < nx; ++k) {
    x[k] = lo + k * dx;
    fe[k] = psi(x[k]) * std::exp(2.0 * x[k]);
  }

  FourierTable T;
  const auto m = static_cast<int>(std::llround(steps));
  T.xi.resize(2 * m + 1);
  T.re.resize(2 * m + 1);
  T.im.resize(2 * m + 1);
  for (int j = 0; j <= 2 * m; ++j) {
    T.xi[j] = (j - m) * opts.dxi;
    transform_at(x, fe, dx, T.xi[j], &T.re[j], &T.im[j]);
  }

  // one-octave continuation for the truncation-error estimate
  double tail = 0.0;
  for (int j = 1; j <= m; ++j) {
    double re, im;
    transform_at(x, fe, dx, opts.xi_max + j * opts.dxi, &re, &im);
    tail += 2.0 * opts.dxi * std::hypot(re, im);  // both signs by symmetry
  }
  T.tail = tail / kSqrt2Pi;

  // smoothness => super-polynomial decay: the octave-over-octave decay
  // factors of the transform must keep improving until the roundoff floor.
  // A fixed-order power law (constant factors) or a plateau means the window
  // truncated the support or dx is too coarse for the requested cutoff.
  double gmax = 0.0;
  for (int j = m; j <= 2 * m; ++j)
    gmax = std::max(gmax, std::hypot(T.re[j], T.im[j]));
  const double floor = 1e-12 * gmax;
  Vec octave_max;
  for (double lo_xi = 1.0; lo_xi < opts.xi_max; lo_xi *= 2.0) {
    const double hi_xi = std::min(2.0 * lo_xi, opts.xi_max);
    double mx = 0.0;
    for (int j = m; j <= 2 * m; ++j) {
      if (T.xi[j] < lo_xi || T.xi[j] > hi_xi) continue;
      mx = std::max(mx, std::hypot(T.re[j], T.im[j]));
    }
    octave_max.push_back(std::max(mx, floor));
  }
  for (std::size_t j = 2; j < octave_max.size(); ++j) {
    if (octave_max[j] <= floor || octave_max[j - 1] <= floor) break;
    const double r_prev = octave_max[j - 1] / octave_max[j - 2];
    const double r_here = octave_max[j] / octave_max[j - 1];
    if (r_here > 0.97 * r_prev) {
      throw AccuracyError("fourier_table: transform of " + psi.name() +
                          " stops gaining decay per octave; widen the "
                          "tabulation window or refine dx");
    }
  }

  return cache.emplace(key, std::move(T)).first->second;
}

// ---------------------------------------------------------------------------
// Spectral routes.
// ---------------------------------------------------------------------------
Vec multiplier_symbol(const EigenSystem& E, const MultiplierSpec& psi, double h) {
  require(h > 0.0, "multiplier_symbol: h must be positive");
  Vec g(E.modes());
  for (int k = 0; k < E.modes(); ++k) g[k] = psi(h * E.lambda_sq[k]);
  return g;
}

Matrix spectral_multiplier(const EigenSystem& E, const MultiplierSpec& psi,
                           double h) {
  return numerics::assemble_operator(E, multiplier_symbol(E, psi, h));
}

Matrix heat_operator(const EigenSystem& E, double t) {
  require(t >= 0.0 && std::isfinite(t), "heat_operator: t must be finite and >= 0");
  Vec g(E.modes());
  for (int k = 0; k < E.modes(); ++k) g[k] = std::exp(-t * E.lambda_sq[k]);
  // modes below relative 1e-18 cannot influence the result at double precision
  return numerics::assemble_operator(E, g, 1e-18);
}

CMatrix heat_operator(const EigenSystem& E, std::complex<double> z) {
  require(std::isfinite(z.real()) && std::isfinite(z.imag()),
          "heat_operator: z must be finite");
  if (z.real() < 0.0) {
    std::ostringstream os;
    os << "heat_operator: e^{-zL} is unbounded for Re z < 0 (got Re z = "
       << z.real() << ")";
    throw PreconditionError(os.str());
  }
  numerics::FunctionOptions fo;
  fo.drop_tol = 1e-18;
  return numerics::matrix_function_c(
      E, [&](double lam2) { return std::exp(-z * lam2); }, fo);
}

FourierRoute multiplier_via_fourier_heat(const EigenSystem& E,
                                         const MultiplierSpec& psi, double h,
                                         const FourierOptions& opts) {
  require(h > 0.0, "multiplier_via_fourier_heat: h must be positive");
  const FourierTable& T = fourier_table(psi, opts);
  const int m = static_cast<int>(T.xi.size());

  FourierRoute R;
  R.symbol.resize(E.modes());
  R.imag_residual = 0.0;
  R.tail_estimate = T.tail;

  // Per mode: g_k = e^{-2 h lam^2} * sum_j w_j hat{psi_e}(xi_j) e^{i xi_j h lam^2},
  // the xi-quadrature of the representation evaluated on the spectrum.
  const double dxi = T.xi[1] - T.xi[0];
  for (int k = 0; k < E.modes(); ++k) {
    const double y = h * E.lambda_sq[k];
    const double damp = std::exp(-2.0 * y);
    double sr = 0.0, si = 0.0;
    double c = 0.0, s = 0.0;
    const double cd = std::cos(dxi * y), sd = std::sin(dxi * y);
    for (int j = 0; j < m; ++j) {
      if (j % 64 == 0) {
        c = std::cos(T.xi[j] * y);
        s = std::sin(T.xi[j] * y);
      }
      const double wj = (j == 0 || j == m - 1) ? 0.5 * dxi : dxi;
      // (re + i im)(c + i s)
      sr += wj * (T.re[j] * c - T.im[j] * s);
      si += wj * (T.re[j] * s + T.im[j] * c);
      const double cn = c * cd - s * sd;
      s = s * cd + c * sd;
      c = cn;
    }
    R.symbol[k] = damp * sr / kSqrt2Pi;
    R.imag_residual = std::max(R.imag_residual, std::fabs(damp * si / kSqrt2Pi));
  }
  R.op = numerics::assemble_operator(E, R.symbol);
  return R;
}

Matrix gradient_of_operator(const ModelOperator& M, const EigenSystem& E,
                            const Vec& symbol) {
  require(M.D.cols == E.n(), "gradient_of_operator: model/eigensystem mismatch");
  const Matrix DP = mul(M.D, E.vectors);
  return numerics::assemble_operator(DP, E, symbol);
}

std::pair<Matrix, Matrix> gradient_of_multiplier(const ModelOperator& M,
                                                 const Matrix& Mpsi) {
  require(M.D.cols == Mpsi.rows, "gradient_of_multiplier: shape mismatch");
  Matrix first = mul(M.D, Mpsi);
  Matrix second;
  if (M.coefficient_space()) {
    second = mul(M.X, Mpsi);
  } else {
    second = Matrix(Mpsi.rows, Mpsi.cols);
    if (M.has_potential()) {
      for (int i = 0; i < Mpsi.rows; ++i) {
        const double sw = std::sqrt(M.potential[i]);
        for (int j = 0; j < Mpsi.cols; ++j) second(i, j) = sw * Mpsi(i, j);
      }
    }
  }
  return {std::move(first), std::move(second)};
}

Matrix riesz_transform(const ModelOperator& M, const EigenSystem& E,
                       RieszFactor which, bool restrict_kernel) {
  const double tol = 1e-12 * std::max(1.0, E.lambda_sq.back());
  if (!restrict_kernel && E.lambda_sq.front() <= tol) {
    throw SingularSpectrumError(
        "riesz_transform: operator has a kernel mode; request the "
        "range restriction to define L^{-1/2}");
  }
  Vec g(E.modes(), 0.0);
  for (int k = 0; k < E.modes(); ++k)
    if (E.lambda_sq[k] > tol) g[k] = 1.0 / std::sqrt(E.lambda_sq[k]);
  if (which == RieszFactor::gradient) return gradient_of_operator(M, E, g);
  if (M.coefficient_space())
    return numerics::assemble_operator(mul(M.X, E.vectors), E, g);
  Matrix left = E.vectors;
  for (int i = 0; i < left.rows; ++i) {
    const double sw = M.has_potential() ? std::sqrt(M.potential[i]) : 0.0;
    for (int k = 0; k < left.cols; ++k) left(i, k) *= sw;
  }
  return numerics::assemble_operator(left, E, g);
}

// ---------------------------------------------------------------------------
// Norm scans.
// ---------------------------------------------------------------------------
namespace {

void check_norm_model(const ModelOperator& M, double p, double q) {
  if (M.coefficient_space() && (p != 2.0 || q != 2.0)) {
    throw UnsupportedError(
        "operator-norm scans outside p=q=2 need a grid model; the coefficient-"
        "space oscillator only carries closed-form 2->2 norms");
  }
}

}  // namespace

UniformityReport uniformity_scan(const ModelOperator& M, const EigenSystem& E,
                                 const MultiplierSpec& psi, const Vec& hs,
                                 double p,
                                 const numerics::OpNormOptions& opts) {
  check_norm_model(M, p, p);
  UniformityReport rep;
  rep.per_h.resize(hs.size());
  parallel_for(hs.size(), sweep_threads(), [&](std::size_t i) {
    if (p == 2.0) {
      // self-adjoint in the weighted inner product: the 2->2 norm is the
      // largest absolute symbol value
      const Vec g = multiplier_symbol(E, psi, hs[i]);
      NormBounds nb;
      nb.upper = 0.0;
      for (const double gv : g) nb.upper = std::max(nb.upper, std::fabs(gv));
      nb.lower = nb.upper;
      nb.exact = true;
      nb.method = "spectral-exact";
      rep.per_h[i] = nb;
    } else {
      const Matrix A = spectral_multiplier(E, psi, hs[i]);
      rep.per_h[i] = numerics::opnorm(A, M.weights, M.weights, p, p, opts);
    }
  });
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const double v = rep.per_h[i].value();
    if (i == 0 || v > rep.sup) {
      rep.sup = v;
      rep.argmax_h = hs[i];
    }
  }
  return rep;
}

std::vector<NormBounds> holomorphic_norm_scan(
    const ModelOperator& M, const EigenSystem& E,
    const std::vector<std::complex<double>>& zs, double p, double q,
    const numerics::OpNormOptions& opts) {
  check_norm_model(M, p, q);
  std::vector<NormBounds> out(zs.size());
  parallel_for(zs.size(), sweep_threads(), [&](std::size_t i) {
    if (p == 2.0 && q == 2.0) {
      NormBounds nb;
      nb.upper = std::exp(-zs[i].real() * E.lambda_sq.front());
      nb.lower = nb.upper;
      nb.exact = true;
      nb.method = "spectral-exact";
      out[i] = nb;
      return;
    }
    const CMatrix A = heat_operator(E, zs[i]);
    out[i] = numerics::opnorm(A, M.weights, M.weights, p, q, opts);
  });
  return out;
}

RayScan holomorphic_ray_scan(const ModelOperator& M, const EigenSystem& E,
                             double theta, double q, const Vec& ts,
                             const numerics::OpNormOptions& opts) {
  require(std::fabs(theta) < 0.5 * kPi, "holomorphic_ray_scan: |theta| < pi/2");
  std::vector<std::complex<double>> zs;
  zs.reserve(ts.size());
  for (const double t : ts) {
    require(t > 0.0, "holomorphic_ray_scan: times must be positive");
    zs.emplace_back(t * std::cos(theta), t * std::sin(theta));
  }
  RayScan scan;
  scan.per_t = holomorphic_norm_scan(M, E, zs, q, q, opts);
  const double expo = std::fabs(0.5 - (q == std::numeric_limits<double>::infinity()
                                           ? 0.0
                                           : 1.0 / q)) +
                      0.5;
  const double growth = std::pow(1.0 / std::cos(theta), expo);
  for (const auto& nb : scan.per_t)
    scan.fitted_c = std::max(scan.fitted_c, nb.value() / growth);
  return scan;
}

}  // namespace bernlab::calculus
