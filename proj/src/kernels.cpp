#include "bernlab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bernlab/simd.hpp"

namespace bernlab::kernels {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require(bool ok, const std::string& what) {
  if (!ok) throw PreconditionError(what);
}

// left diag(g) right^T with no weight factor (kernel values).
Matrix kernel_sandwich(const Matrix& left, const Matrix& right, const Vec& g) {
  require(left.cols == static_cast<int>(g.size()) && right.cols == left.cols,
          "kernel_sandwich: mode count mismatch");
  std::vector<int> keep;
  for (int l = 0; l < left.cols; ++l)
    if (g[l] != 0.0) keep.push_back(l);
  const int r = static_cast<int>(keep.size());
  Matrix K(left.rows, right.rows);
  if (r == 0) return K;
  Matrix A(left.rows, r), B(right.rows, r);
  for (int i = 0; i < left.rows; ++i)
    for (int l = 0; l < r; ++l) A(i, l) = left(i, keep[l]) * g[keep[l]];
  for (int j = 0; j < right.rows; ++j)
    for (int l = 0; l < r; ++l) B(j, l) = right(j, keep[l]);
  simd::ops().gemm_nt(left.rows, right.rows, r, A.a.data(), r, B.a.data(), r,
                      K.a.data(), right.rows);
  return K;
}

Vec heat_symbol(const EigenSystem& E, double t) {
  Vec g(E.modes());
  double gmax = 0.0;
  for (int k = 0; k < E.modes(); ++k) {
    g[k] = std::exp(-t * E.lambda_sq[k]);
    gmax = std::max(gmax, g[k]);
  }
  for (double& gv : g)
    if (gv < 1e-18 * gmax) gv = 0.0;
  return g;
}

Vec trapezoid_weights(const Vec& x) {
  const int n = static_cast<int>(x.size());
  require(n >= 2, "trapezoid_weights: need at least two points");
  Vec w(n, 0.0);
  for (int i = 0; i + 1 < n; ++i) {
    const double half = 0.5 * (x[i + 1] - x[i]);
    w[i] += half;
    w[i + 1] += half;
  }
  return w;
}

// Rows of the evaluation operator: dof -> values at the requested points.
Matrix eval_rows(const ModelOperator& M, const EigenSystem& E, const Vec* eval_x,
                 bool derivative, Vec* coords, Vec* weights) {
  if (!M.coefficient_space()) {
    require(eval_x == nullptr,
            "kernel tables on grid models use the model grid; eval_x must be unset");
    if (!derivative) {
      *coords = M.grid.x;
      *weights = M.grid.w;
      return E.vectors;
    }
    // edge midpoints
    const int ne = M.D.rows;
    coords->resize(ne);
    if (M.grid.periodic) {
      for (int e = 0; e < ne; ++e) coords->at(e) = M.grid.x[e] + 0.5 * M.grid.h;
    } else {
      for (int e = 0; e < ne; ++e)
        coords->at(e) = M.grid.x[0] + (e - 0.5) * M.grid.h;
    }
    *weights = M.edge_weights;
    return mul(M.D, E.vectors);
  }

  require(eval_x != nullptr,
          "oscillator kernel tables need an explicit evaluation grid");
  *coords = *eval_x;
  *weights = trapezoid_weights(*eval_x);
  const Matrix T = models::hermite_table(*eval_x, M.dof());  // rows 0..K
  const int nx = static_cast<int>(eval_x->size());
  if (!derivative) {
    Matrix S(nx, M.dof());
    for (int i = 0; i < nx; ++i)
      for (int k = 0; k < M.dof(); ++k) S(i, k) = T(k, i);
    return mul(S, E.vectors);
  }
  Matrix Sup(nx, M.dof() + 1);
  for (int i = 0; i < nx; ++i)
    for (int k = 0; k <= M.dof(); ++k) Sup(i, k) = T(k, i);
  return mul(Sup, mul(M.D, E.vectors));
}

}  // namespace

double KernelTable::distance(int i, int j) const {
  double d = std::fabs(x[i] - y[j]);
  if (period > 0.0) d = std::min(d, period - d);
  return d;
}

double KernelTable::ball_volume(int j, double r) const {
  double v = 0.0;
  for (int jj = 0; jj < static_cast<int>(y.size()); ++jj) {
    double d = std::fabs(y[jj] - y[j]);
    if (period > 0.0) d = std::min(d, period - d);
    if (d <= r) v += wy[jj];
  }
  return v;
}

double KernelTable::min_value() const {
  double m = k.a.empty() ? 0.0 : k.a[0];
  for (const double v : k.a) m = std::min(m, v);
  return m;
}

double KernelTable::max_on_diagonal() const {
  require(x.size() == y.size(), "max_on_diagonal: table is not square");
  double m = 0.0;
  for (int i = 0; i < k.rows; ++i) m = std::max(m, k(i, i));
  return m;
}

KernelTable heat_kernel_table(const ModelOperator& M, const EigenSystem& E,
                              double t, const Vec* eval_x) {
  require(t > 0.0 && std::isfinite(t), "heat_kernel_table: t must be positive");
  KernelTable K;
  K.t = t;
  K.period = M.grid.periodic ? M.grid.x.back() + M.grid.h : 0.0;
  const Matrix rows = eval_rows(M, E, eval_x, false, &K.x, &K.wx);
  K.y = K.x;
  K.wy = K.wx;
  K.k = kernel_sandwich(rows, rows, heat_symbol(E, t));
  return K;
}

KernelTable heat_gradient_table(const ModelOperator& M, const EigenSystem& E,
                                double t, const Vec* eval_x) {
  require(t > 0.0 && std::isfinite(t), "heat_gradient_table: t must be positive");
  KernelTable K;
  K.t = t;
  K.period = M.grid.periodic ? M.grid.x.back() + M.grid.h : 0.0;
  Vec ycoords, yweights;
  const Matrix cols = eval_rows(M, E, eval_x, false, &ycoords, &yweights);
  const Matrix rows = eval_rows(M, E, eval_x, true, &K.x, &K.wx);
  K.y = ycoords;
  K.wy = yweights;
  K.k = kernel_sandwich(rows, cols, heat_symbol(E, t));
  return K;
}

double mehler_kernel(double t, double x, double y) {
  require(t > 0.0, "mehler_kernel: t must be positive");
  const double th = std::tanh(t);
  const double s = x + y, d = x - y;
  const double expo = -0.25 * (th * s * s + d * d / th);
  return std::exp(expo) / std::sqrt(2.0 * kPi * std::sinh(2.0 * t));
}

KernelTable mehler_table(const Vec& x, const Vec& w, double t) {
  require(x.size() == w.size(), "mehler_table: coordinate/weight size mismatch");
  KernelTable K;
  K.t = t;
  K.x = K.y = x;
  K.wx = K.wy = w;
  const int n = static_cast<int>(x.size());
  K.k = Matrix(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) K.k(i, j) = mehler_kernel(t, x[i], x[j]);
  return K;
}

KernelTable mehler_gradient_table(const Vec& x, const Vec& w, double t) {
  KernelTable K = mehler_table(x, w, t);
  const double th = std::tanh(t);
  const int n = static_cast<int>(x.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      K.k(i, j) *= -0.5 * (th * (x[i] + x[j]) + (x[i] - x[j]) / th);
  return K;
}

namespace {

double table_floor(const KernelTable& K, double noise_floor) {
  double kmax = 0.0;
  for (const double v : K.k.a) kmax = std::max(kmax, std::fabs(v));
  return noise_floor * kmax;
}

}  // namespace

GaussianFit gaussian_bound_fit(const KernelTable& K, double c,
                               double noise_floor) {
  require(c > 0.0, "gaussian_bound_fit: c must be positive");
  require(noise_floor >= 0.0, "gaussian_bound_fit: negative noise floor");
  require(K.x.size() == K.y.size(), "gaussian_bound_fit: table is not square");
  GaussianFit fit;
  fit.c = c;
  fit.floor = table_floor(K, noise_floor);
  const double st = std::sqrt(K.t);
  Vec vol(K.k.rows);
  for (int i = 0; i < K.k.rows; ++i) vol[i] = K.ball_volume(i, st);
  for (int i = 0; i < K.k.rows; ++i)
    for (int j = 0; j < K.k.cols; ++j) {
      const double a = std::fabs(K.k(i, j));
      if (a <= fit.floor) {
        ++fit.skipped;
        continue;
      }
      const double d = K.distance(i, j);
      const double cand = a * vol[i] * std::exp(c * d * d / K.t);
      if (cand > fit.C) {
        fit.C = cand;
        fit.i = i;
        fit.j = j;
      }
    }
  return fit;
}

LowerEnvelopeFit liyau_lower_fit(const ModelOperator& M, const KernelTable& K,
                                 double C_trial, double noise_floor) {
  if (M.has_potential()) {
    throw UnsupportedError(
        "lower envelopes require W == 0; with a potential the kernel decays "
        "exponentially in time and no two-sided Gaussian comparison holds");
  }
  require(C_trial > 0.0, "liyau_lower_fit: C_trial must be positive");
  require(K.x.size() == K.y.size(), "liyau_lower_fit: table is not square");
  LowerEnvelopeFit fit;
  fit.floor = table_floor(K, noise_floor);
  const double st = std::sqrt(K.t);
  const double inf = std::numeric_limits<double>::infinity();
  Vec vol(K.k.rows);
  for (int i = 0; i < K.k.rows; ++i) vol[i] = K.ball_volume(i, st);
  for (int i = 0; i < K.k.rows; ++i)
    for (int j = 0; j < K.k.cols; ++j) {
      const double v = K.k(i, j);
      if (std::fabs(v) <= fit.floor) {
        ++fit.skipped;
        continue;
      }
      // need v >= (C_trial V)^{-1} e^{-c d^2/t}: height h = v * V * C_trial
      const double h = v * vol[i] * C_trial;
      const double d = K.distance(i, j);
      double cand;
      if (h <= 0.0) {
        cand = inf;  // negative entry: no exponent helps
      } else if (d == 0.0) {
        cand = h >= 1.0 ? 0.0 : inf;  // on-diagonal height is exponent-free
      } else {
        cand = h >= 1.0 ? 0.0 : K.t * std::log(1.0 / h) / (d * d);
      }
      if (cand > fit.c_low) {
        fit.c_low = cand;
        fit.i = i;
        fit.j = j;
        if (cand == inf) return fit;
      }
    }
  return fit;
}

OnDiagonalFit on_diagonal_fit(const std::vector<KernelTable>& tables) {
  require(tables.size() >= 4,
          "on_diagonal_fit: need at least four times to justify a power fit");
  const int n = static_cast<int>(tables.size());
  Vec lt(n), lk(n);
  for (int i = 0; i < n; ++i) {
    const double m = tables[i].max_on_diagonal();
    require(m > 0.0, "on_diagonal_fit: nonpositive diagonal");
    lt[i] = std::log(tables[i].t);
    lk[i] = std::log(m);
    for (int j = 0; j < i; ++j)
      require(tables[i].t != tables[j].t, "on_diagonal_fit: duplicate times");
  }
  double mt = 0.0, mk = 0.0;
  for (int i = 0; i < n; ++i) {
    mt += lt[i];
    mk += lk[i];
  }
  mt /= n;
  mk /= n;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    sxx += (lt[i] - mt) * (lt[i] - mt);
    sxy += (lt[i] - mt) * (lk[i] - mk);
  }
  OnDiagonalFit fit;
  const double slope = sxy / sxx;
  fit.m = -2.0 * slope;
  fit.residual = 0.0;
  fit.C = 0.0;
  for (int i = 0; i < n; ++i) {
    const double pred = mk + slope * (lt[i] - mt);
    fit.residual = std::max(fit.residual, std::fabs(pred - lk[i]));
    fit.C = std::max(fit.C, std::exp(lk[i] + 0.5 * fit.m * lt[i]));
  }
  return fit;
}

GradientMassReport grigoryan_integral(const KernelTable& G, int y_index,
                                      double c0, double noise_floor) {
  require(c0 > 0.0, "grigoryan_integral: c0 must be positive");
  require(y_index >= 0 && y_index < G.k.cols, "grigoryan_integral: bad column");
  GradientMassReport rep;
  rep.floor = table_floor(G, noise_floor);
  rep.integral = 0.0;
  rep.skipped = 0;
  for (int i = 0; i < G.k.rows; ++i) {
    const double g = G.k(i, y_index);
    if (std::fabs(g) <= rep.floor) {
      ++rep.skipped;
      continue;
    }
    const double d = G.distance(i, y_index);
    rep.integral += G.wx[i] * g * g * std::exp(c0 * d * d / G.t);
  }
  rep.volume = G.ball_volume(y_index, std::sqrt(G.t));
  rep.ratio = rep.integral * G.t * rep.volume;
  return rep;
}

MassCheck gaussian_mass_check(const ModelOperator& M, double h, double c) {
  require(h > 0.0 && c > 0.0, "gaussian_mass_check: h and c must be positive");
  const Vec& x = M.grid.x;
  const Vec& w = M.grid.w;
  const int n = static_cast<int>(x.size());
  require(n > 0, "gaussian_mass_check: model has no physical grid");
  const double period = M.grid.periodic ? x.back() + M.grid.h : 0.0;
  const double r = std::sqrt(h);
  MassCheck out{0.0, x[0]};
  for (int j = 0; j < n; ++j) {
    double mass = 0.0, vol = 0.0;
    for (int i = 0; i < n; ++i) {
      double d = std::fabs(x[i] - x[j]);
      if (period > 0.0) d = std::min(d, period - d);
      mass += w[i] * std::exp(-c * d * d / h);
      if (d <= r) vol += w[i];
    }
    const double ratio = mass / vol;
    if (ratio > out.max_ratio) {
      out.max_ratio = ratio;
      out.argmax_y = x[j];
    }
  }
  return out;
}

double chapman_kolmogorov_defect(const KernelTable& Kt, const KernelTable& Ks,
                                 const KernelTable& Kts) {
  require(Kt.k.cols == Ks.k.rows && Kt.k.rows == Kts.k.rows &&
              Ks.k.cols == Kts.k.cols,
          "chapman_kolmogorov_defect: incompatible tables");
  {
    std::ostringstream os;
    if (std::fabs(Kt.t + Ks.t - Kts.t) > 1e-12 * Kts.t) {
      os << "chapman_kolmogorov_defect: times do not add up (" << Kt.t << " + "
         << Ks.t << " != " << Kts.t << ")";
      throw PreconditionError(os.str());
    }
  }
  // (K_t o K_s)(i,j) = sum_z w_z k_t(i,z) k_s(z,j)
  const int n = Kt.k.rows, m = Ks.k.cols, r = Kt.k.cols;
  Matrix A = Kt.k;
  for (int i = 0; i < n; ++i)
    for (int z = 0; z < r; ++z) A(i, z) *= Kt.wy[z];
  const Matrix Kst = transpose(Ks.k);
  Matrix comp(n, m);
  simd::ops().gemm_nt(n, m, r, A.a.data(), r, Kst.a.data(), r, comp.a.data(), m);

  double scale = 0.0;
  for (const double v : Kts.k.a) scale = std::max(scale, std::fabs(v));
  double defect = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      defect = std::max(defect, std::fabs(comp(i, j) - Kts.k(i, j)));
  return scale > 0.0 ? defect / scale : defect;
}

}  // namespace bernlab::kernels
