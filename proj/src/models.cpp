#include "bernlab/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "bernlab/simd.hpp"

namespace bernlab::models {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_nodes(int n, const char* who, int min_n) {
  if (n < min_n) {
    std::ostringstream os;
    os << who << ": need at least " << min_n << " nodes, got " << n;
    throw PreconditionError(os.str());
  }
}

Vec eval_potential(const std::function<double(double)>& W, const Vec& x,
                   const char* who) {
  Vec out;
  if (!W) return out;
  out.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = W(x[i]);
    if (!(out[i] >= 0.0) || !std::isfinite(out[i])) {
      std::ostringstream os;
      os << who << ": potential must be finite and nonnegative, got W(" << x[i]
         << ") = " << out[i];
      throw PreconditionError(os.str());
    }
  }
  return out;
}

}  // namespace

bool ModelOperator::has_potential() const {
  for (const double w : potential)
    if (w != 0.0) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Builders.
// ---------------------------------------------------------------------------
ModelOperator make_circle(int n, const std::function<double(double)>& W) {
  check_nodes(n, "make_circle", 3);
  ModelOperator M;
  M.kind = Kind::circle;
  M.name = "circle";
  const double h = 2.0 * kPi / n;
  M.grid.h = h;
  M.grid.periodic = true;
  M.grid.x.resize(n);
  M.grid.w.assign(n, h);
  for (int i = 0; i < n; ++i) M.grid.x[i] = i * h;
  M.weights = M.grid.w;
  M.potential = eval_potential(W, M.grid.x, "make_circle");

  M.tri.diag.assign(n, 2.0 / (h * h));
  M.tri.off.assign(n - 1, -1.0 / (h * h));
  for (int i = 0; i < n && !M.potential.empty(); ++i) M.tri.diag[i] += M.potential[i];
  M.wrap.assign(1, -1.0 / (h * h));

  M.D = Matrix(n, n);  // edge e joins nodes e and e+1 (mod n)
  for (int e = 0; e < n; ++e) {
    M.D(e, e) = -1.0 / h;
    M.D(e, (e + 1) % n) = 1.0 / h;
  }
  M.edge_weights.assign(n, h);
  return M;
}

ModelOperator make_dirichlet(double x0, double x1, int n,
                             const std::function<double(double)>& W) {
  check_nodes(n, "make_dirichlet", 2);
  if (!(x1 > x0)) throw PreconditionError("make_dirichlet: need x1 > x0");
  ModelOperator M;
  M.kind = Kind::dirichlet_interval;
  M.name = "dirichlet";
  const double h = (x1 - x0) / (n + 1);
  M.grid.h = h;
  M.grid.x.resize(n);
  M.grid.w.assign(n, h);
  for (int i = 0; i < n; ++i) M.grid.x[i] = x0 + (i + 1) * h;
  M.weights = M.grid.w;
  M.potential = eval_potential(W, M.grid.x, "make_dirichlet");

  M.tri.diag.assign(n, 2.0 / (h * h));
  M.tri.off.assign(n - 1, -1.0 / (h * h));
  for (int i = 0; i < n && !M.potential.empty(); ++i) M.tri.diag[i] += M.potential[i];

  // edge e joins node e-1 to node e; nodes -1 and n are the zero boundary
  M.D = Matrix(n + 1, n);
  for (int e = 0; e <= n; ++e) {
    if (e - 1 >= 0) M.D(e, e - 1) = -1.0 / h;
    if (e <= n - 1) M.D(e, e) = 1.0 / h;
  }
  M.edge_weights.assign(n + 1, h);
  return M;
}

ModelOperator make_divergence(double x0, double x1, int n,
                              const std::function<double(double)>& c,
                              const std::function<double(double)>& W) {
  if (!c) throw PreconditionError("make_divergence: coefficient function required");
  ModelOperator M = make_dirichlet(x0, x1, n, W);
  M.kind = Kind::divergence_form;
  M.name = "divergence";
  const double h = M.grid.h;

  Vec ce(n + 1);  // edge midpoints
  for (int e = 0; e <= n; ++e) {
    const double xm = x0 + (e + 0.5) * h;
    ce[e] = c(xm);
    if (!(ce[e] > 0.0) || !std::isfinite(ce[e])) {
      std::ostringstream os;
      os << "make_divergence: coefficient must be finite and positive, got c("
         << xm << ") = " << ce[e];
      throw PreconditionError(os.str());
    }
  }
  for (int i = 0; i < n; ++i) {
    M.tri.diag[i] = (ce[i] + ce[i + 1]) / (h * h) +
                    (M.potential.empty() ? 0.0 : M.potential[i]);
    if (i < n - 1) M.tri.off[i] = -ce[i + 1] / (h * h);
  }
  for (int e = 0; e <= n; ++e) {
    const double s = std::sqrt(ce[e]);
    if (e - 1 >= 0) M.D(e, e - 1) = -s / h;
    if (e <= n - 1) M.D(e, e) = s / h;
  }
  return M;
}

Matrix hermite_table(const Vec& x, int kmax) {
  const int nx = static_cast<int>(x.size());
  Matrix T(kmax + 1, nx);
  const double c0 = std::pow(kPi, -0.25);
  for (int i = 0; i < nx; ++i) T(0, i) = c0 * std::exp(-0.5 * x[i] * x[i]);
  if (kmax >= 1)
    for (int i = 0; i < nx; ++i) T(1, i) = std::sqrt(2.0) * x[i] * T(0, i);
  for (int k = 1; k < kmax; ++k) {
    const double a = std::sqrt(2.0 / (k + 1));
    const double b = std::sqrt(static_cast<double>(k) / (k + 1));
    for (int i = 0; i < nx; ++i)
      T(k + 1, i) = a * x[i] * T(k, i) - b * T(k - 1, i);
  }
  return T;
}

ModelOperator make_oscillator(int K, const OscillatorOptions& opts) {
  if (K < 1) throw PreconditionError("make_oscillator: need at least one mode");
  ModelOperator M;
  M.kind = Kind::harmonic_oscillator;
  M.name = "oscillator";
  M.weights.assign(K, 1.0);

  // Ladder factors: d/dx phi_k = sqrt(k/2) phi_{k-1} - sqrt((k+1)/2) phi_{k+1},
  //                 x    phi_k = sqrt(k/2) phi_{k-1} + sqrt((k+1)/2) phi_{k+1}.
  M.D = Matrix(K + 1, K);
  M.X = Matrix(K + 1, K);
  for (int k = 0; k < K; ++k) {
    const double lo = std::sqrt(0.5 * k);
    const double hi = std::sqrt(0.5 * (k + 1));
    if (k >= 1) {
      M.D(k - 1, k) = lo;
      M.X(k - 1, k) = lo;
    }
    M.D(k + 1, k) = -hi;
    M.X(k + 1, k) = hi;
  }

  // Physical sampling grid: past the top turning point, resolving the top
  // mode's shortest local wavelength.
  const double lam_top = std::sqrt(2.0 * (2.0 * K + 1.0));
  const double R = lam_top + opts.padding;
  int nx = opts.grid_points;
  if (nx <= 0) {
    const double hx = 2.0 * kPi / (16.0 * lam_top);
    nx = static_cast<int>(std::ceil(2.0 * R / hx)) + 1;
  }
  if (nx < 3) throw PreconditionError("make_oscillator: grid too small");
  if (nx % 2 == 0) ++nx;  // keep x = 0 on the grid: sup norms of even states peak there
  const double hx = 2.0 * R / (nx - 1);
  M.grid.h = hx;
  M.grid.x.resize(nx);
  M.grid.w.assign(nx, hx);
  M.grid.w.front() = M.grid.w.back() = 0.5 * hx;
  for (int i = 0; i < nx; ++i) M.grid.x[i] = -R + i * hx;

  const Matrix T = hermite_table(M.grid.x, K);  // rows 0..K
  M.sample = Matrix(nx, K);
  M.sample_up = Matrix(nx, K + 1);
  for (int i = 0; i < nx; ++i) {
    for (int k = 0; k <= K; ++k) {
      M.sample_up(i, k) = T(k, i);
      if (k < K) M.sample(i, k) = T(k, i);
    }
  }
  return M;
}

// ---------------------------------------------------------------------------
// Operator assembly and spectra.
// ---------------------------------------------------------------------------
Matrix ModelOperator::dense_operator() const {
  if (coefficient_space()) {
    const int K = dof();
    Matrix A(K, K);
    for (int k = 0; k < K; ++k) A(k, k) = 2.0 * k + 1.0;
    return A;
  }
  const int n = tri.n();
  Matrix A(n, n);
  for (int i = 0; i < n; ++i) {
    A(i, i) = tri.diag[i];
    if (i < n - 1) A(i, i + 1) = A(i + 1, i) = tri.off[i];
  }
  if (kind == Kind::circle) A(0, n - 1) = A(n - 1, 0) = wrap[0];
  return A;
}

namespace {

EigenSystem truncate(EigenSystem E, int max_modes) {
  if (max_modes < 0 || max_modes >= E.modes()) return E;
  E.lambda_sq.resize(max_modes);
  Matrix V(E.vectors.rows, max_modes);
  for (int i = 0; i < E.vectors.rows; ++i)
    for (int k = 0; k < max_modes; ++k) V(i, k) = E.vectors(i, k);
  E.vectors = std::move(V);
  return E;
}

EigenSystem circle_closed_form(const ModelOperator& M) {
  const int n = M.grid.n();
  const double h = M.grid.h;
  // Frequency f carries eigenvalue (4/h^2) sin^2(pi f / n); each 0 < f < n/2
  // contributes a cosine and a sine mode, both already orthonormal in the
  // discrete weighted inner product.
  EigenSystem E;
  E.weights = M.weights;
  E.vectors = Matrix(n, n);
  E.lambda_sq.resize(n);
  const double c_single = 1.0 / std::sqrt(2.0 * kPi);
  const double c_pair = 1.0 / std::sqrt(kPi);
  int col = 0;
  for (int f = 0; col < n; ++f) {
    const double s = std::sin(kPi * f / n);
    const double lam2 = 4.0 / (h * h) * s * s;
    if (f == 0) {
      for (int i = 0; i < n; ++i) E.vectors(i, col) = c_single;
      E.lambda_sq[col++] = lam2;
    } else if (2 * f == n) {
      for (int i = 0; i < n; ++i) E.vectors(i, col) = (i % 2 ? -c_single : c_single);
      E.lambda_sq[col++] = lam2;
    } else {
      for (int i = 0; i < n; ++i)
        E.vectors(i, col) = c_pair * std::cos(f * M.grid.x[i]);
      E.lambda_sq[col++] = lam2;
      for (int i = 0; i < n; ++i)
        E.vectors(i, col) = c_pair * std::sin(f * M.grid.x[i]);
      E.lambda_sq[col++] = lam2;
    }
  }
  return E;
}

EigenSystem dirichlet_closed_form(const ModelOperator& M) {
  const int n = M.grid.n();
  const double h = M.grid.h;
  const double ell = (n + 1) * h;
  EigenSystem E;
  E.weights = M.weights;
  E.vectors = Matrix(n, n);
  E.lambda_sq.resize(n);
  const double amp = std::sqrt(2.0 / ell);
  for (int k = 1; k <= n; ++k) {
    const double s = std::sin(0.5 * kPi * k / (n + 1));
    E.lambda_sq[k - 1] = 4.0 / (h * h) * s * s;
    for (int i = 0; i < n; ++i)
      E.vectors(i, k - 1) = amp * std::sin(kPi * k * (i + 1) / (n + 1));
  }
  return E;
}

}  // namespace

EigenSystem ModelOperator::eigensystem(int max_modes) const {
  if (coefficient_space()) {
    const int K = dof();
    EigenSystem E;
    E.weights = weights;
    E.lambda_sq.resize(K);
    for (int k = 0; k < K; ++k) E.lambda_sq[k] = 2.0 * k + 1.0;
    E.vectors = Matrix::identity(K);
    return truncate(std::move(E), max_modes);
  }
  if (kind == Kind::circle && !has_potential())
    return truncate(circle_closed_form(*this), max_modes);
  if (kind == Kind::dirichlet_interval && !has_potential())
    return truncate(dirichlet_closed_form(*this), max_modes);

  EigenSystem E;
  E.weights = weights;
  const double rescale = 1.0 / std::sqrt(grid.h);  // Euclidean -> weighted
  if (kind == Kind::circle) {
    const int n = grid.n();
    if (n > 768) {
      std::ostringstream os;
      os << "circle with potential needs the dense solver; " << n
         << " nodes exceeds the supported 768 (drop the potential or shrink the grid)";
      throw PreconditionError(os.str());
    }
    auto res = numerics::eig_sym_dense(dense_operator());
    E.lambda_sq = std::move(res.values);
    E.vectors = std::move(res.vectors);
  } else {
    auto res = numerics::eig_sym_tridiag(tri);
    E.lambda_sq = std::move(res.values);
    E.vectors = std::move(res.vectors);
  }
  for (double& v : E.vectors.a) v *= rescale;
  return truncate(std::move(E), max_modes);
}

Vec ModelOperator::spectrum() const {
  if (coefficient_space()) {
    Vec v(dof());
    for (int k = 0; k < dof(); ++k) v[k] = 2.0 * k + 1.0;
    return v;
  }
  if (kind == Kind::circle && !has_potential()) {
    const int n = grid.n();
    Vec v(n);
    for (int k = 0; k < n; ++k) {
      const double s = std::sin(kPi * k / n);
      v[k] = 4.0 / (grid.h * grid.h) * s * s;
    }
    std::sort(v.begin(), v.end());
    return v;
  }
  if (kind == Kind::dirichlet_interval && !has_potential()) {
    const int n = grid.n();
    Vec v(n);
    for (int k = 1; k <= n; ++k) {
      const double s = std::sin(0.5 * kPi * k / (n + 1));
      v[k - 1] = 4.0 / (grid.h * grid.h) * s * s;
    }
    return v;
  }
  if (kind == Kind::circle) {
    auto res = numerics::eig_sym_dense(dense_operator(), {.vectors = false});
    return res.values;
  }
  auto res = numerics::eig_sym_tridiag(tri, {.vectors = false});
  return res.values;
}

// ---------------------------------------------------------------------------
// Function-space norms.
// ---------------------------------------------------------------------------
namespace {

Vec apply(const Matrix& A, const Vec& u) {
  Vec out(A.rows);
  simd::ops().matvec(A.rows, A.cols, A.a.data(), A.cols, u.data(), out.data());
  return out;
}

}  // namespace

Vec ModelOperator::values_on_grid(const Vec& u) const {
  if (!coefficient_space()) return u;
  return apply(sample, u);
}

double ModelOperator::lp(const Vec& u, double p) const {
  if (coefficient_space() && p != 2.0)
    return numerics::lp_norm(grid.w, apply(sample, u), p);
  return numerics::lp_norm(weights, u, p);
}

double ModelOperator::grad_lp(const Vec& u, double p) const {
  const Vec g = apply(D, u);
  if (coefficient_space()) {
    if (p == 2.0) return numerics::lp_norm(Vec(g.size(), 1.0), g, 2.0);
    return numerics::lp_norm(grid.w, apply(sample_up, g), p);
  }
  return numerics::lp_norm(edge_weights, g, p);
}

double ModelOperator::sqrtW_lp(const Vec& u, double p) const {
  if (coefficient_space()) {
    const Vec g = apply(X, u);
    if (p == 2.0) return numerics::lp_norm(Vec(g.size(), 1.0), g, 2.0);
    return numerics::lp_norm(grid.w, apply(sample_up, g), p);
  }
  if (!has_potential()) return 0.0;
  Vec s(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) s[i] = std::sqrt(potential[i]) * u[i];
  return numerics::lp_norm(weights, s, p);
}

double ModelOperator::lp(const Vec& ur, const Vec& ui, double p) const {
  if (coefficient_space() && p != 2.0)
    return numerics::lp_norm2(grid.w, apply(sample, ur), apply(sample, ui), p);
  return numerics::lp_norm2(weights, ur, ui, p);
}

double ModelOperator::grad_lp(const Vec& ur, const Vec& ui, double p) const {
  const Vec gr = apply(D, ur), gi = apply(D, ui);
  if (coefficient_space()) {
    if (p == 2.0) return numerics::lp_norm2(Vec(gr.size(), 1.0), gr, gi, 2.0);
    return numerics::lp_norm2(grid.w, apply(sample_up, gr), apply(sample_up, gi), p);
  }
  return numerics::lp_norm2(edge_weights, gr, gi, p);
}

double ModelOperator::sqrtW_lp(const Vec& ur, const Vec& ui, double p) const {
  if (coefficient_space()) {
    const Vec gr = apply(X, ur), gi = apply(X, ui);
    if (p == 2.0) return numerics::lp_norm2(Vec(gr.size(), 1.0), gr, gi, 2.0);
    return numerics::lp_norm2(grid.w, apply(sample_up, gr), apply(sample_up, gi), p);
  }
  if (!has_potential()) return 0.0;
  Vec sr(ur.size()), si(ui.size());
  for (std::size_t i = 0; i < ur.size(); ++i) {
    const double s = std::sqrt(potential[i]);
    sr[i] = s * ur[i];
    si[i] = s * ui[i];
  }
  return numerics::lp_norm2(weights, sr, si, p);
}

}  // namespace bernlab::models
