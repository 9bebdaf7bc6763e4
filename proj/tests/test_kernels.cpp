#include "doctest.h"

#include <cmath>
#include <limits>
#include <vector>

#include "bernlab/common.hpp"
#include "bernlab/calculus.hpp"
#include "bernlab/kernels.hpp"
#include "bernlab/models.hpp"
#include "bernlab/numerics.hpp"

using namespace bernlab;
using namespace bernlab::kernels;
using bernlab::models::hermite_table;
using bernlab::models::make_circle;
using bernlab::models::make_dirichlet;
using bernlab::models::make_oscillator;
using bernlab::models::ModelOperator;
using bernlab::numerics::EigenSystem;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();

double max_abs(const Matrix& A) {
  double m = 0.0;
  for (const double v : A.a) m = std::max(m, std::fabs(v));
  return m;
}

Vec linspace(double a, double b, double step) {
  Vec x;
  for (double v = a; v <= b + 1e-12; v += step) x.push_back(v);
  return x;
}

Vec trapezoid(const Vec& x) {
  Vec w(x.size(), 0.0);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double half = 0.5 * (x[i + 1] - x[i]);
    w[i] += half;
    w[i + 1] += half;
  }
  return w;
}

// Discrete circle heat kernel, summed mode by mode from the eigenvalue
// formula. Shares nothing with the table assembly except the spectrum.
double circle_kernel_sum(int n, double t, double d) {
  const double h = 2.0 * kPi / n;
  double acc = 1.0;  // constant mode
  for (int f = 1; f < n / 2; ++f) {
    const double s = std::sin(kPi * f / n);
    const double mu = 4.0 / (h * h) * s * s;
    acc += 2.0 * std::exp(-t * mu) * std::cos(f * d);
  }
  if (n % 2 == 0) {
    const double mu = 4.0 / (h * h);
    acc += std::exp(-t * mu) * std::cos(0.5 * n * d);
  }
  return acc / (2.0 * kPi);
}

// Continuum circle heat kernel (theta function series).
double theta_kernel(double t, double d) {
  double acc = 1.0;
  for (int k = 1; k <= 80; ++k) acc += 2.0 * std::exp(-t * k * k) * std::cos(k * d);
  return acc / (2.0 * kPi);
}

void check_table_shape(const KernelTable& K, bool markov_rows) {
  const double scale = max_abs(K.k);
  REQUIRE(scale > 0.0);
  // symmetry
  for (int i = 0; i < K.k.rows; i += 7)
    for (int j = 0; j < K.k.cols; j += 5)
      CHECK(std::fabs(K.k(i, j) - K.k(j, i)) <= 1e-10 * scale);
  // positivity up to discretization artifacts
  CHECK(K.min_value() >= -1e-10 * scale);
  // sub-Markov rows; exactly Markov when requested
  for (int i = 0; i < K.k.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < K.k.cols; ++j) s += K.wy[j] * K.k(i, j);
    CHECK(s <= 1.0 + 1e-10);
    if (markov_rows) CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

}  // namespace

TEST_CASE("heat kernel tables are symmetric sub-Markov kernels") {
  const ModelOperator Mc = make_circle(128);
  check_table_shape(heat_kernel_table(Mc, Mc.eigensystem(), 0.3), true);

  const ModelOperator Md = make_dirichlet(0.0, kPi, 90);
  check_table_shape(heat_kernel_table(Md, Md.eigensystem(), 0.2), false);

  const ModelOperator Mo = make_oscillator(50);
  const Vec ex = linspace(-6.0, 6.0, 0.05);
  const KernelTable Ko = heat_kernel_table(Mo, Mo.eigensystem(), 0.5, &ex);
  const double scale = max_abs(Ko.k);
  for (int i = 0; i < Ko.k.rows; i += 11)
    for (int j = 0; j < Ko.k.cols; j += 13)
      CHECK(std::fabs(Ko.k(i, j) - Ko.k(j, i)) <= 1e-10 * scale);
  CHECK(Ko.min_value() >= -1e-8 * scale);

  CHECK_THROWS_AS(heat_kernel_table(Mc, Mc.eigensystem(), 0.0), PreconditionError);
  CHECK_THROWS_AS(heat_kernel_table(Mo, Mo.eigensystem(), 0.5), PreconditionError);
  CHECK_THROWS_AS(heat_kernel_table(Mc, Mc.eigensystem(), 0.5, &ex),
                  PreconditionError);
}

TEST_CASE("the table and the assembled heat operator differ by the quadrature weights") {
  const ModelOperator M = make_dirichlet(-3.0, 3.0, 70, [](double x) { return x * x; });
  const EigenSystem E = M.eigensystem();
  const double t = 0.15;
  const KernelTable K = heat_kernel_table(M, E, t);
  const Matrix A = calculus::heat_operator(E, t);
  double worst = 0.0;
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < A.cols; ++j)
      worst = std::max(worst, std::fabs(A(i, j) - K.k(i, j) * K.wy[j]));
  CHECK(worst <= 1e-12 * max_abs(A));
}

TEST_CASE("circle tables match the analytic mode sum exactly") {
  const int n = 256;
  const ModelOperator M = make_circle(n);
  const KernelTable K = heat_kernel_table(M, M.eigensystem(), 0.1);
  for (int j : {0, 3, 17, 64, 128, 200}) {
    const double d = K.distance(0, j);
    CHECK(K.k(0, j) == doctest::Approx(circle_kernel_sum(n, 0.1, d)).epsilon(1e-12));
  }
}

TEST_CASE("grid refinement converges to the theta function at second order") {
  const double t = 0.1;
  const ModelOperator M1 = make_circle(1024);
  const ModelOperator M2 = make_circle(2048);
  const KernelTable K1 = heat_kernel_table(M1, M1.eigensystem(), t);
  const KernelTable K2 = heat_kernel_table(M2, M2.eigensystem(), t);
  for (int j : {0, 16, 128, 256}) {  // distances up to pi/2
    const double d = 2.0 * kPi * j / 1024.0;
    const double exact = theta_kernel(t, d);
    const double v1 = K1.k(0, j);
    const double v2 = K2.k(0, 2 * j);
    // each grid is O(h^2) accurate, so errors shrink fourfold per refinement
    const double e1 = std::fabs(v1 - exact), e2 = std::fabs(v2 - exact);
    CHECK(e1 / e2 > 3.4);
    CHECK(e1 / e2 < 4.6);
    // and the h^2-extrapolated value reaches the continuum answer up to the
    // fourth-order remainder (~(h^2)^2 in absolute terms at this resolution)
    const double rich = (4.0 * v2 - v1) / 3.0;
    CHECK(std::fabs(rich - exact) <= 1e-8 * exact + 6e-11);
  }
  // long-time limit: the kernel flattens to 1/(2 pi)
  const ModelOperator Ms = make_circle(64);
  const KernelTable Ks = heat_kernel_table(Ms, Ms.eigensystem(), 50.0);
  for (const double v : Ks.k.a)
    CHECK(v == doctest::Approx(1.0 / (2.0 * kPi)).epsilon(1e-10));
}

TEST_CASE("mehler values agree with the closed form and the eigen sum") {
  for (double t : {0.25, 0.5, 1.0})
    CHECK(mehler_kernel(t, 0.0, 0.0) ==
          doctest::Approx(1.0 / std::sqrt(2.0 * kPi * std::sinh(2.0 * t)))
              .epsilon(1e-13));

  // independent check: truncated sum over oscillator eigenfunctions
  const Vec pts{-2.0, -1.0, -0.5, 0.0, 1.0, 2.0};
  const Matrix H = hermite_table(pts, 200);
  const double t = 0.5;
  for (std::size_t a = 0; a < pts.size(); ++a)
    for (std::size_t b = 0; b < pts.size(); ++b) {
      double sum = 0.0;
      for (int k = 200; k >= 0; --k)
        sum += std::exp(-(2.0 * k + 1.0) * t) * H(k, a) * H(k, b);
      const double closed = mehler_kernel(t, pts[a], pts[b]);
      CHECK(std::fabs(sum - closed) <= 1e-10 * closed + 1e-15);
    }

  // the sampled-eigensystem table reproduces the closed form away from the
  // truncation edge
  const ModelOperator Mo = make_oscillator(60);
  const Vec ex = linspace(-5.0, 5.0, 0.1);
  const KernelTable Ko = heat_kernel_table(Mo, Mo.eigensystem(), 0.5, &ex);
  const double scale = max_abs(Ko.k);
  for (int i = 0; i < Ko.k.rows; i += 9)
    for (int j = 0; j < Ko.k.cols; j += 9)
      CHECK(std::fabs(Ko.k(i, j) - mehler_kernel(0.5, ex[i], ex[j])) <=
            1e-10 * scale);

  CHECK_THROWS_AS(mehler_kernel(0.0, 1.0, 1.0), PreconditionError);
}

TEST_CASE("closed-form kernel gradient matches finite differences and the ladder") {
  const Vec x = linspace(-4.0, 4.0, 0.25);
  const Vec w = trapezoid(x);
  const double t = 0.5;
  const KernelTable G = mehler_gradient_table(x, w, t);

  // central differences of the closed form, step tuned for ~1e-9 accuracy
  const double dx = 1e-5;
  for (std::size_t i = 0; i < x.size(); i += 3)
    for (std::size_t j = 0; j < x.size(); j += 3) {
      const double fd = (mehler_kernel(t, x[i] + dx, x[j]) -
                         mehler_kernel(t, x[i] - dx, x[j])) /
                        (2.0 * dx);
      CHECK(std::fabs(G.k(static_cast<int>(i), static_cast<int>(j)) - fd) <=
            1e-8);
    }

  // the ladder-derivative series converges to the same table once the mode
  // cutoff resolves t
  const ModelOperator Mo = make_oscillator(60);
  const KernelTable S = heat_gradient_table(Mo, Mo.eigensystem(), t, &x);
  const double scale = max_abs(G.k);
  CHECK(max_abs_diff(S.k, G.k) <= 1e-10 * scale);
}

TEST_CASE("gaussian envelopes hold with a t-uniform constant") {
  const ModelOperator M = make_circle(128);
  const EigenSystem E = M.eigensystem();

  double lo = kInf, hi = 0.0;
  for (double t : {1.0 / 16, 1.0 / 4, 1.0}) {
    const GaussianFit fit = gaussian_bound_fit(heat_kernel_table(M, E, t), 0.125);
    CHECK(fit.C > 0.0);
    CHECK(fit.C < kInf);
    CHECK(fit.floor > 0.0);
    lo = std::min(lo, fit.C);
    hi = std::max(hi, fit.C);
  }
  CHECK(hi / lo < 2.0);
  // flat-space prediction: V * sup p_t = 2 sqrt(t) (4 pi t)^{-1/2} = pi^{-1/2}
  CHECK(lo > 0.8 / std::sqrt(kPi));
  CHECK(hi < 1.5 / std::sqrt(kPi));

  // the envelope constant can only grow with the exponent it must absorb
  const KernelTable K = heat_kernel_table(M, E, 0.25);
  const double c16 = gaussian_bound_fit(K, 1.0 / 16).C;
  const double c8 = gaussian_bound_fit(K, 1.0 / 8).C;
  const double c4 = gaussian_bound_fit(K, 1.0 / 4).C;
  CHECK(c16 <= c8 + 1e-12);
  CHECK(c8 <= c4 + 1e-12);

  // a drastic floor hides the far field and reports how much it skipped
  const GaussianFit coarse = gaussian_bound_fit(K, 0.125, 0.9);
  CHECK(coarse.skipped > 0);
  CHECK(coarse.C <= c8);

  CHECK_THROWS_AS(gaussian_bound_fit(K, 0.0), PreconditionError);
  CHECK_THROWS_AS(gaussian_bound_fit(K, 0.125, -1.0), PreconditionError);
}

TEST_CASE("oscillator kernels keep the gaussian envelope at small times") {
  const Vec x = linspace(-6.0, 6.0, 0.02);
  const Vec w = trapezoid(x);
  double lo = kInf, hi = 0.0;
  for (double t : {1.0 / 32, 1.0 / 8}) {
    const GaussianFit fit = gaussian_bound_fit(mehler_table(x, w, t), 0.125);
    CHECK(fit.C > 0.0);
    lo = std::min(lo, fit.C);
    hi = std::max(hi, fit.C);
  }
  CHECK(hi / lo < 2.0);
}

TEST_CASE("lower envelopes exist on the circle and fail at a Dirichlet boundary") {
  const ModelOperator M = make_circle(128);
  const EigenSystem E = M.eigensystem();
  const KernelTable K = heat_kernel_table(M, E, 0.5);
  const double C_trial = 4.0 * gaussian_bound_fit(K, 0.125).C;
  const LowerEnvelopeFit fit = liyau_lower_fit(M, K, C_trial);
  CHECK(fit.c_low > 0.0);
  CHECK(fit.c_low < 0.5);
  // a more generous constant needs a smaller exponent
  const LowerEnvelopeFit looser = liyau_lower_fit(M, K, 2.0 * C_trial);
  CHECK(looser.c_low <= fit.c_low + 1e-12);

  // near the boundary the diagonal collapses: no exponent can save the bound
  const ModelOperator Md = make_dirichlet(0.0, kPi, 100);
  const KernelTable Kd = heat_kernel_table(Md, Md.eigensystem(), 0.5);
  const double Cd = 4.0 * gaussian_bound_fit(Kd, 0.125).C;
  const LowerEnvelopeFit bad = liyau_lower_fit(Md, Kd, Cd);
  CHECK(bad.c_low == kInf);
  CHECK(bad.i == bad.j);

  const ModelOperator Mw = make_dirichlet(-3.0, 3.0, 50, [](double x) { return x * x; });
  const KernelTable Kw = heat_kernel_table(Mw, Mw.eigensystem(), 0.5);
  CHECK_THROWS_AS(liyau_lower_fit(Mw, Kw, 4.0), UnsupportedError);
  CHECK_THROWS_AS(liyau_lower_fit(M, K, 0.0), PreconditionError);
}

TEST_CASE("on-diagonal power fits recover the one-dimensional exponent") {
  const ModelOperator M = make_circle(256);
  const EigenSystem E = M.eigensystem();
  std::vector<KernelTable> tables;
  for (int e = -7; e <= -2; ++e)
    tables.push_back(heat_kernel_table(M, E, std::ldexp(1.0, e)));
  const OnDiagonalFit fit = on_diagonal_fit(tables);
  CHECK(fit.m > 0.95);
  CHECK(fit.m < 1.05);
  CHECK(fit.residual < 0.05);
  // flat-space constant: sup p_t = (4 pi t)^{-1/2}
  CHECK(fit.C > 0.8 / std::sqrt(4.0 * kPi));
  CHECK(fit.C < 1.3 / std::sqrt(4.0 * kPi));
  // the envelope interpretation: sup_diag <= C t^{-m/2} across the sweep
  for (const auto& K : tables)
    CHECK(K.max_on_diagonal() <= fit.C * std::pow(K.t, -0.5 * fit.m) * (1 + 1e-12));

  const Vec x = linspace(-6.0, 6.0, 0.02);
  const Vec w = trapezoid(x);
  std::vector<KernelTable> osc;
  for (int e = -7; e <= -4; ++e) osc.push_back(mehler_table(x, w, std::ldexp(1.0, e)));
  const OnDiagonalFit ofit = on_diagonal_fit(osc);
  CHECK(ofit.m > 0.95);
  CHECK(ofit.m < 1.05);

  std::vector<KernelTable> three(tables.begin(), tables.begin() + 3);
  CHECK_THROWS_AS(on_diagonal_fit(three), PreconditionError);
  std::vector<KernelTable> dup = {tables[0], tables[1], tables[2], tables[0]};
  CHECK_THROWS_AS(on_diagonal_fit(dup), PreconditionError);
}

TEST_CASE("weighted gradient mass is t-uniform at the small exponent only") {
  const ModelOperator M = make_circle(128);
  const EigenSystem E = M.eigensystem();
  double lo = kInf, hi = 0.0;
  double small_t_big_c0 = 0.0, big_t_big_c0 = 0.0;
  for (double t : {1.0 / 64, 1.0 / 16, 1.0 / 4}) {
    const KernelTable G = heat_gradient_table(M, E, t);
    const GradientMassReport rep = grigoryan_integral(G, 0, 1.0 / 16);
    CHECK(rep.integral > 0.0);
    CHECK(rep.volume == doctest::Approx(2.0 * std::sqrt(t)).epsilon(0.05));
    lo = std::min(lo, rep.ratio);
    hi = std::max(hi, rep.ratio);

    const GradientMassReport wild = grigoryan_integral(G, 0, 1.0);
    if (t == 1.0 / 64) small_t_big_c0 = wild.ratio;
    if (t == 1.0 / 4) big_t_big_c0 = wild.ratio;
  }
  CHECK(hi / lo < 2.0);
  // above the Gaussian decay rate the weighted mass blows up as t -> 0
  CHECK(small_t_big_c0 > 10.0 * big_t_big_c0);

  const KernelTable G = heat_gradient_table(M, E, 0.25);
  CHECK_THROWS_AS(grigoryan_integral(G, 0, 0.0), PreconditionError);
  CHECK_THROWS_AS(grigoryan_integral(G, -1, 0.125), PreconditionError);
}

TEST_CASE("gaussian mass per ball volume matches the flat-space value") {
  // radius = 4.5 grid steps: the closed ball holds exactly 9 points, so its
  // volume is exactly 2r and the flat-space constant sqrt(pi)/2 is exact
  const ModelOperator Mc = make_circle(64);
  const double r = 4.5 * Mc.grid.h;
  const MassCheck interior = gaussian_mass_check(Mc, r * r, 1.0);
  CHECK(interior.max_ratio ==
        doctest::Approx(0.5 * std::sqrt(kPi)).epsilon(1e-9));

  // on an interval the max is a boundary effect: the ball volume is clipped
  // faster than the gaussian mass, so the ratio inflates but stays below one
  const ModelOperator M = make_dirichlet(-4.0, 4.0, 799);
  const MassCheck edge = gaussian_mass_check(M, 0.01, 1.0);
  CHECK(edge.max_ratio > 0.88);
  CHECK(edge.max_ratio < 1.0);
  CHECK(std::fabs(edge.argmax_y) > 3.5);
  const MassCheck flat = gaussian_mass_check(Mc, 1e6, 1.0);
  CHECK(flat.max_ratio == doctest::Approx(1.0).epsilon(1e-3));

  const MassCheck spiky = gaussian_mass_check(Mc, 1.0, 1e8);
  CHECK(spiky.max_ratio < 0.06);

  CHECK_THROWS_AS(gaussian_mass_check(Mc, 0.0, 1.0), PreconditionError);
  CHECK_THROWS_AS(gaussian_mass_check(Mc, 1.0, -2.0), PreconditionError);
}

TEST_CASE("heat kernels compose under the semigroup law") {
  const ModelOperator M = make_circle(192);
  const EigenSystem E = M.eigensystem();
  const KernelTable Ka = heat_kernel_table(M, E, 0.3);
  const KernelTable Kb = heat_kernel_table(M, E, 0.7);
  const KernelTable Kc = heat_kernel_table(M, E, 1.0);
  CHECK(chapman_kolmogorov_defect(Ka, Kb, Kc) <= 1e-9);

  const KernelTable Kbad = heat_kernel_table(M, E, 0.9);
  CHECK_THROWS_AS(chapman_kolmogorov_defect(Ka, Kb, Kbad), PreconditionError);

  // closed-form oscillator kernel on a wide window: the truncated integral
  // still composes to nine digits
  const Vec x = linspace(-8.0, 8.0, 0.02);
  const Vec w = trapezoid(x);
  const KernelTable Ma = mehler_table(x, w, 0.25);
  const KernelTable Mc2 = mehler_table(x, w, 0.5);
  CHECK(chapman_kolmogorov_defect(Ma, Ma, Mc2) <= 1e-9);
}
