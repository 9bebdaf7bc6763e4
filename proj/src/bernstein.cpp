#include "bernlab/bernstein.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bernlab/simd.hpp"

namespace bernlab::bernstein {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 6.28318530717958647692;

void require(bool ok, const std::string& msg) {
  if (!ok) throw PreconditionError(msg);
}

Vec mat_apply(const Matrix& A, const Vec& u) {
  Vec out(A.rows);
  simd::ops().matvec(A.rows, A.cols, A.a.data(), A.cols, u.data(), out.data());
  return out;
}

// out += coef * A^T x, accumulated row by row so the traversal stays row-major.
void add_apply_t(const Matrix& A, const Vec& x, double coef, Vec& out) {
  const auto& sops = simd::ops();
  for (int i = 0; i < A.rows; ++i) {
    const double s = coef * x[static_cast<std::size_t>(i)];
    if (s != 0.0) sops.axpy(A.cols, s, A.row(i), out.data());
  }
}

Matrix take_cols(const Matrix& A, int c0, int c1) {
  Matrix B(A.rows, c1 - c0);
  for (int i = 0; i < A.rows; ++i)
    for (int j = c0; j < c1; ++j) B(i, j - c0) = A(i, j);
  return B;
}

Matrix scale_rows(Matrix A, const Vec& s) {
  for (int i = 0; i < A.rows; ++i)
    simd::ops().scale(A.cols, s[static_cast<std::size_t>(i)], A.row(i));
  return A;
}

Vec sqrt_potential(const ModelOperator& M) {
  Vec s(M.potential.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    s[i] = std::sqrt(std::max(0.0, M.potential[i]));
  return s;
}

// Exponent used by the smoothed surrogate; the sup norm is approximated by a
// high finite power, the reported ratios are always re-evaluated exactly.
double cap_exponent(double p) { return std::isinf(p) ? 64.0 : p; }

double vec_l2(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (const double v : a) s += v * v;
  for (const double v : b) s += v * v;
  return std::sqrt(s);
}

// left diag(g) right^T as kernel values (zero symbol entries skipped).
Matrix sandwich(const Matrix& left, const Matrix& right, const Vec& g) {
  std::vector<int> keep;
  for (std::size_t l = 0; l < g.size(); ++l)
    if (g[l] != 0.0) keep.push_back(static_cast<int>(l));
  Matrix K(left.rows, right.rows);
  const int r = static_cast<int>(keep.size());
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

// Quadrature operator norms of a kernel table (the operator integrates the
// kernel against the weights): 1->1 sums columns against the row weights,
// inf->inf sums rows against the column weights.
double quad_norm(const Matrix& K, const Vec& wx, const Vec& wy, double p) {
  double best = 0.0;
  if (std::isinf(p)) {
    for (int i = 0; i < K.rows; ++i) {
      double s = 0.0;
      for (int j = 0; j < K.cols; ++j) s += wy[j] * std::fabs(K(i, j));
      best = std::max(best, s);
    }
    return best;
  }
  for (int j = 0; j < K.cols; ++j) {
    double s = 0.0;
    for (int i = 0; i < K.rows; ++i) s += wx[i] * std::fabs(K(i, j));
    best = std::max(best, s);
  }
  return best;
}

// B = A diag(w) V^T: the dof-space operator behind a coefficient map.
Matrix band_operator(const Matrix& A, const Matrix& V, const Vec& w) {
  Matrix Vw = V;
  for (int j = 0; j < Vw.rows; ++j)
    simd::ops().scale(Vw.cols, w[static_cast<std::size_t>(j)], Vw.row(j));
  Matrix B(A.rows, V.rows);
  if (A.cols > 0)
    simd::ops().gemm_nt(A.rows, V.rows, A.cols, A.a.data(), A.cols, Vw.a.data(),
                        Vw.cols, B.a.data(), B.cols);
  return B;
}

// ---------------------------------------------------------------------------
// Smoothed weighted p-norm surrogate.  The smoothing parameter 1e-6 (relative
// to the largest modulus) keeps the ascent differentiable where entries
// vanish; the largest modulus is frozen when differentiating.
// ---------------------------------------------------------------------------
struct MapState {
  double n = 0.0;  // smoothed norm value
  Vec gr, gi;      // d n / d v per re/im part (field space)
};

void smooth_wnorm(const Vec& w, double p, const Vec& vr, const Vec* vi,
                  MapState& st) {
  const int n = static_cast<int>(vr.size());
  st.gr.assign(n, 0.0);
  if (vi)
    st.gi.assign(n, 0.0);
  else
    st.gi.clear();
  double vmax2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double m2 = vr[i] * vr[i];
    if (vi) m2 += (*vi)[i] * (*vi)[i];
    vmax2 = std::max(vmax2, m2);
  }
  if (vmax2 == 0.0) {
    st.n = 0.0;
    return;
  }
  const double eps2 = 1e-12;  // (1e-6)^2 relative smoothing floor
  double S = 0.0;
  for (int i = 0; i < n; ++i) {
    double m2 = vr[i] * vr[i];
    if (vi) m2 += (*vi)[i] * (*vi)[i];
    S += w[i] * std::pow(m2 / vmax2 + eps2, 0.5 * p);
  }
  const double vmax = std::sqrt(vmax2);
  st.n = vmax * std::pow(S, 1.0 / p);
  const double outer = std::pow(S, 1.0 / p - 1.0) / vmax;
  for (int i = 0; i < n; ++i) {
    double m2 = vr[i] * vr[i];
    if (vi) m2 += (*vi)[i] * (*vi)[i];
    const double f = outer * w[i] * std::pow(m2 / vmax2 + eps2, 0.5 * p - 1.0);
    st.gr[i] = f * vr[i];
    if (vi) st.gi[i] = f * (*vi)[i];
  }
}

struct NormMap {
  Matrix A;
  Vec w;
  double p = 2.0;  // capped exponent for the surrogate
};

struct RatioProblem {
  std::vector<NormMap> num, den;
  double scale = 1.0;
  bool square_num = false;  // hypot combine (exponent-2 convention)
  bool is_complex = false;  // coefficient layout [re; im]
  int half = 0;             // complex searches: modes per half
};

double surrogate(const RatioProblem& P, const Vec& c, Vec& gc) {
  gc.assign(c.size(), 0.0);
  const int h = P.half;
  Vec cre, cim;
  if (P.is_complex) {
    cre.assign(c.begin(), c.begin() + h);
    cim.assign(c.begin() + h, c.end());
  }
  struct Piece {
    const NormMap* m;
    MapState st;
  };
  auto eval_group = [&](const std::vector<NormMap>& maps, bool square,
                        std::vector<Piece>& ps) {
    double total = 0.0, sq = 0.0;
    for (const auto& m : maps) {
      Piece piece;
      piece.m = &m;
      if (P.is_complex) {
        const Vec vr = mat_apply(m.A, cre);
        const Vec vi = mat_apply(m.A, cim);
        smooth_wnorm(m.w, m.p, vr, &vi, piece.st);
      } else {
        const Vec vr = mat_apply(m.A, c);
        smooth_wnorm(m.w, m.p, vr, nullptr, piece.st);
      }
      total += piece.st.n;
      sq += piece.st.n * piece.st.n;
      ps.push_back(std::move(piece));
    }
    return square ? std::sqrt(sq) : total;
  };
  std::vector<Piece> nps, dps;
  const double N = eval_group(P.num, P.square_num, nps);
  const double D = eval_group(P.den, false, dps);
  if (D <= 0.0) return 0.0;
  const double R = P.scale * N / D;

  auto accumulate = [&](std::vector<Piece>& ps, bool square, double group,
                        double coef_group) {
    for (auto& piece : ps) {
      if (piece.st.n == 0.0) continue;
      const double f = square ? (group > 0.0 ? piece.st.n / group : 0.0) : 1.0;
      const double coef = coef_group * f;
      if (P.is_complex) {
        Vec gre(h, 0.0), gim(h, 0.0);
        add_apply_t(piece.m->A, piece.st.gr, 1.0, gre);
        add_apply_t(piece.m->A, piece.st.gi, 1.0, gim);
        for (int i = 0; i < h; ++i) {
          gc[i] += coef * gre[i];
          gc[h + i] += coef * gim[i];
        }
      } else {
        add_apply_t(piece.m->A, piece.st.gr, coef, gc);
      }
    }
  };
  accumulate(nps, P.square_num, N, P.scale / D);
  accumulate(dps, false, D, -R / D);
  return R;
}

// ---------------------------------------------------------------------------
// Start vectors: band-edge basis vector, rotations within a degenerate pair,
// structured spreads, then random unit vectors.
// ---------------------------------------------------------------------------
std::vector<Vec> make_starts(int dim, int anchor, int partner, int restarts,
                             std::uint64_t seed) {
  std::vector<Vec> starts;
  {
    Vec e(dim, 0.0);
    e[anchor] = 1.0;
    starts.push_back(std::move(e));
  }
  if (partner >= 0) {
    for (const double turn : {0.125, 0.25, 0.375, -0.25}) {
      Vec v(dim, 0.0);
      v[anchor] = std::cos(turn * kTwoPi);
      v[partner] = std::sin(turn * kTwoPi);
      starts.push_back(std::move(v));
    }
  }
  {
    Vec v(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
    starts.push_back(v);
    for (int i = 0; i < dim; i += 2) v[i] = -v[i];
    starts.push_back(std::move(v));
  }
  {
    Vec v(dim, 0.0);
    double s = 0.0;
    for (int i = 0; i < dim; ++i) {
      v[i] = std::pow(0.5, std::abs(i - anchor));
      s += v[i] * v[i];
    }
    for (double& x : v) x /= std::sqrt(s);
    starts.push_back(std::move(v));
  }
  Rng rng(seed);
  while (static_cast<int>(starts.size()) < restarts)
    starts.push_back(rng.unit_vector(dim));
  if (static_cast<int>(starts.size()) > std::max(restarts, 1))
    starts.resize(std::max(restarts, 1));
  return starts;
}

int degenerate_partner(const Vec& lambda_sq, int k) {
  const double tol = 1e-8 * std::max(1.0, lambda_sq[k]);
  if (k > 0 && std::fabs(lambda_sq[k - 1] - lambda_sq[k]) <= tol) return k - 1;
  if (k + 1 < static_cast<int>(lambda_sq.size()) &&
      std::fabs(lambda_sq[k + 1] - lambda_sq[k]) <= tol)
    return k + 1;
  return -1;
}

// ---------------------------------------------------------------------------
// Exact ratio evaluations through the model norms.
// ---------------------------------------------------------------------------
struct Parts {
  double grad = 0.0, pot = 0.0, norm = 0.0;
};

double combine(double a, double b, double p) {
  return p == 2.0 ? std::hypot(a, b) : a + b;
}

void check_nonzero(const Vec& cre, const Vec& cim) {
  if (vec_l2(cre, cim) == 0.0)
    throw PreconditionError("ratio evaluation: coefficient vector is zero");
}

Parts measure(const ModelOperator& M, const EigenSystem& E, const Vec& cre,
              const Vec* cim, int first, double p) {
  const Vec ur = synthesize(E, cre, first);
  Parts pr;
  if (cim) {
    const Vec ui = synthesize(E, *cim, first);
    pr.grad = M.grad_lp(ur, ui, p);
    pr.pot = M.sqrtW_lp(ur, ui, p);
    pr.norm = M.lp(ur, ui, p);
  } else {
    pr.grad = M.grad_lp(ur, p);
    pr.pot = M.sqrtW_lp(ur, p);
    pr.norm = M.lp(ur, p);
  }
  return pr;
}

double eval_forward(const ModelOperator& M, const EigenSystem& E, const Vec& cre,
                    const Vec* cim, double lambda_top, double p, Parts* parts) {
  const Parts pr = measure(M, E, cre, cim, 0, p);
  if (parts) *parts = pr;
  if (pr.norm <= 0.0) return 0.0;
  return combine(pr.grad, pr.pot, p) / (lambda_top * pr.norm);
}

double eval_reverse(const ModelOperator& M, const EigenSystem& E, const Vec& cre,
                    const Vec* cim, int first, double lambda_cut, double q,
                    Parts* parts) {
  const Parts pr = measure(M, E, cre, cim, first, q);
  if (parts) *parts = pr;
  const double den = combine(pr.grad, pr.pot, q);
  if (den <= 0.0) return 0.0;
  return lambda_cut * pr.norm / den;
}

double eval_lplq(const ModelOperator& M, const EigenSystem& E, const Vec& c,
                 double lambda_pow, double p, double q, Parts* parts) {
  const Vec u = synthesize(E, c, 0);
  Parts pr;
  pr.grad = M.grad_lp(u, q);
  pr.pot = M.sqrtW_lp(u, q);
  pr.norm = M.lp(u, p);
  if (parts) *parts = pr;
  if (pr.norm <= 0.0) return 0.0;
  return combine(pr.grad, pr.pot, q) / (lambda_pow * pr.norm);
}

// ---------------------------------------------------------------------------
// Coefficient-to-field maps for a mode band.
// ---------------------------------------------------------------------------
struct BandMaps {
  Matrix value, grad, pot;  // pot empty when W == 0
  Vec w_value, w_grad;
  Matrix Vband;  // eigenvector block (certificate assembly)
};

BandMaps band_maps(const ModelOperator& M, const EigenSystem& E, int lo, int hi) {
  BandMaps B;
  B.Vband = take_cols(E.vectors, lo, hi + 1);
  if (!M.coefficient_space()) {
    B.value = B.Vband;
    B.w_value = M.weights;
    B.grad = mul(M.D, B.Vband);
    B.w_grad = M.edge_weights;
    if (M.has_potential()) B.pot = scale_rows(B.Vband, sqrt_potential(M));
    return B;
  }
  B.value = mul(M.sample, B.Vband);
  B.w_value = M.grid.w;
  B.grad = mul(M.sample_up, mul(M.D, B.Vband));
  B.w_grad = M.grid.w;
  B.pot = mul(M.sample_up, mul(M.X, B.Vband));
  return B;
}

void check_complex_model(const ModelOperator& M, const OptimizerConfig& cfg) {
  if (cfg.complex_coefficients && M.kind != models::Kind::circle)
    throw PreconditionError(
        "complex coefficient searches are defined for the circle only "
        "(paired modes); the other models have real eigenfunctions");
}

void check_quadrature_exponent(const ModelOperator& M, double p) {
  if (M.coefficient_space() && p != 2.0 && p != 1.0 && !std::isinf(p))
    throw UnsupportedError(
        "coefficient-space operator norms are available for exponents "
        "1, 2, inf only (quadrature kernel route)");
}

struct AscentResult {
  Vec best;
  double value = 0.0;
  int stalls = 0;
  int starts = 0;
};

AscentResult run_ascent(const RatioProblem& P, int dim, int anchor, int partner,
                        const OptimizerConfig& cfg,
                        const std::function<double(const Vec&)>& exact) {
  AscentResult out;
  const auto starts = make_starts(dim, anchor, partner, cfg.restarts, cfg.seed);
  Vec g;
  for (const auto& s0 : starts) {
    Vec x = s0;
    const double f0 = surrogate(P, x, g);
    numerics::sphere_ascent(
        x, [&](const Vec& v) {
          Vec gg;
          return surrogate(P, v, gg);
        },
        [&](const Vec& v, Vec& gg) { surrogate(P, v, gg); }, cfg.iterations,
        cfg.tol, cfg.backtrack);
    const double fs = surrogate(P, x, g);
    if (fs <= f0 * (1.0 + 1e-12)) ++out.stalls;  // recorded, never fatal
    const double fx = exact(x);
    ++out.starts;
    if (out.best.empty() || fx > out.value) {
      out.best = x;
      out.value = fx;
    }
  }
  return out;
}

std::string ascent_method(const AscentResult& r, const std::string& cert) {
  std::ostringstream os;
  os << "projected-ascent(starts=" << r.starts << ", stalls=" << r.stalls << ")";
  if (!cert.empty()) os << "+" << cert;
  return os.str();
}

void split_complex(const Vec& c, int half, Vec* re, Vec* im) {
  re->assign(c.begin(), c.begin() + half);
  im->assign(c.begin() + half, c.end());
}

}  // namespace

Vec synthesize(const EigenSystem& E, const Vec& coeffs, int first) {
  require(first >= 0 && first + static_cast<int>(coeffs.size()) <= E.modes(),
          "synthesize: coefficient window exceeds the mode count");
  Vec full(E.modes(), 0.0);
  for (std::size_t k = 0; k < coeffs.size(); ++k) full[first + k] = coeffs[k];
  return mat_apply(E.vectors, full);
}

double bernstein_ratio(const ModelOperator& M, const EigenSystem& E,
                       const Vec& coeffs, double p) {
  check_nonzero(coeffs, {});
  const int count = static_cast<int>(coeffs.size());
  require(count >= 1 && count <= E.modes(), "bernstein_ratio: bad band size");
  return eval_forward(M, E, coeffs, nullptr, E.lambda(count - 1), p, nullptr);
}

double bernstein_ratio(const ModelOperator& M, const EigenSystem& E,
                       const Vec& cre, const Vec& cim, double p) {
  check_nonzero(cre, cim);
  require(cre.size() == cim.size(), "bernstein_ratio: re/im size mismatch");
  const int count = static_cast<int>(cre.size());
  require(count >= 1 && count <= E.modes(), "bernstein_ratio: bad band size");
  return eval_forward(M, E, cre, &cim, E.lambda(count - 1), p, nullptr);
}

double reverse_ratio(const ModelOperator& M, const EigenSystem& E,
                     const Vec& coeffs, int tail_lo, double q) {
  check_nonzero(coeffs, {});
  require(tail_lo >= 0 && tail_lo + static_cast<int>(coeffs.size()) <= E.modes(),
          "reverse_ratio: bad tail band");
  const double lc = E.lambda(tail_lo);
  require(lc > 0.0, "reverse_ratio: tail band must start above the kernel");
  return eval_reverse(M, E, coeffs, nullptr, tail_lo, lc, q, nullptr);
}

double reverse_ratio(const ModelOperator& M, const EigenSystem& E,
                     const Vec& cre, const Vec& cim, int tail_lo, double q) {
  check_nonzero(cre, cim);
  require(cre.size() == cim.size(), "reverse_ratio: re/im size mismatch");
  require(tail_lo >= 0 && tail_lo + static_cast<int>(cre.size()) <= E.modes(),
          "reverse_ratio: bad tail band");
  const double lc = E.lambda(tail_lo);
  require(lc > 0.0, "reverse_ratio: tail band must start above the kernel");
  return eval_reverse(M, E, cre, &cim, tail_lo, lc, q, nullptr);
}

double lp_lq_ratio(const ModelOperator& M, const EigenSystem& E,
                   const Vec& coeffs, double p, double q) {
  check_nonzero(coeffs, {});
  const int count = static_cast<int>(coeffs.size());
  require(count >= 1 && count <= E.modes(), "lp_lq_ratio: bad band size");
  const double inv_p = std::isinf(p) ? 0.0 : 1.0 / p;
  const double inv_q = std::isinf(q) ? 0.0 : 1.0 / q;
  const double e = 1.0 + std::fabs(inv_p - inv_q);
  return eval_lplq(M, E, coeffs, std::pow(E.lambda(count - 1), e), p, q, nullptr);
}

RatioReport max_bernstein_ratio(const ModelOperator& M, const EigenSystem& E,
                                int count, double p, const OptimizerConfig& cfg) {
  require(count >= 1 && count <= E.modes(), "max_bernstein_ratio: bad band size");
  check_complex_model(M, cfg);
  const double lt = E.lambda(count - 1);
  if (lt <= 0.0)
    throw SingularSpectrumError(
        "max_bernstein_ratio: band-edge eigenvalue vanishes");
  RatioReport rep;
  rep.lambda_top = lt;

  if (p == 2.0) {
    // energy identity: the ratio is exactly 1 at the band-edge eigenvector
    rep.coeffs.assign(count, 0.0);
    rep.coeffs.back() = 1.0;
    Parts parts;
    rep.achieved = eval_forward(M, E, rep.coeffs, nullptr, lt, 2.0, &parts);
    rep.grad_part = parts.grad;
    rep.pot_part = parts.pot;
    rep.norm_part = parts.norm;
    rep.upper = 1.0;
    rep.method = "closed-form(sq-sum)";
    return rep;
  }
  if (M.coefficient_space()) check_quadrature_exponent(M, p);

  const BandMaps B = band_maps(M, E, 0, count - 1);
  RatioProblem P;
  P.scale = 1.0 / lt;
  P.is_complex = cfg.complex_coefficients;
  P.half = count;
  const double pc = cap_exponent(p);
  P.num.push_back({B.grad, B.w_grad, pc});
  if (B.pot.rows > 0) P.num.push_back({B.pot, B.w_value, pc});
  P.den.push_back({B.value, B.w_value, pc});

  const int dim = P.is_complex ? 2 * count : count;
  const int anchor = count - 1;
  const int partner_abs = count >= 2 ? degenerate_partner(E.lambda_sq, anchor) : -1;
  const int partner = (partner_abs >= 0 && partner_abs < count) ? partner_abs : -1;

  auto exact = [&](const Vec& c) {
    if (P.is_complex) {
      Vec re, im;
      split_complex(c, count, &re, &im);
      return eval_forward(M, E, re, &im, lt, p, nullptr);
    }
    return eval_forward(M, E, c, nullptr, lt, p, nullptr);
  };
  const AscentResult R = run_ascent(P, dim, anchor, partner, cfg, exact);
  rep.achieved = R.value;
  Parts parts;
  if (P.is_complex) {
    split_complex(R.best, count, &rep.coeffs, &rep.coeffs_im);
    eval_forward(M, E, rep.coeffs, &rep.coeffs_im, lt, p, &parts);
  } else {
    rep.coeffs = R.best;
    eval_forward(M, E, rep.coeffs, nullptr, lt, p, &parts);
  }
  rep.grad_part = parts.grad;
  rep.pot_part = parts.pot;
  rep.norm_part = parts.norm;

  std::string cert;
  if (!M.coefficient_space()) {
    const Matrix Bg = band_operator(B.grad, B.Vband, M.weights);
    double up = numerics::opnorm(Bg, M.edge_weights, M.weights, p, p).upper;
    if (B.pot.rows > 0) {
      const Matrix Bw = band_operator(B.pot, B.Vband, M.weights);
      up += numerics::opnorm(Bw, M.weights, M.weights, p, p).upper;
    }
    rep.upper = up / lt;
    cert = "opnorm-certificate";
  } else {
    Vec ones(static_cast<std::size_t>(count), 1.0);
    double up = quad_norm(sandwich(B.grad, B.value, ones), M.grid.w, M.grid.w, p);
    up += quad_norm(sandwich(B.pot, B.value, ones), M.grid.w, M.grid.w, p);
    rep.upper = up / lt;
    cert = "quadrature-certificate";
  }
  rep.method = ascent_method(R, cert);
  return rep;
}

RatioReport max_reverse_ratio(const ModelOperator& M, const EigenSystem& E,
                              int tail_lo, int tail_hi, double q,
                              const OptimizerConfig& cfg) {
  require(tail_lo >= 0 && tail_lo <= tail_hi && tail_hi < E.modes(),
          "max_reverse_ratio: bad tail band");
  check_complex_model(M, cfg);
  const double lc = E.lambda(tail_lo);
  if (lc <= 0.0)
    throw SingularSpectrumError(
        "max_reverse_ratio: tail band must start above the kernel");
  const int m = tail_hi - tail_lo + 1;
  RatioReport rep;
  rep.lambda_top = lc;

  if (q == 2.0) {
    rep.coeffs.assign(m, 0.0);
    rep.coeffs.front() = 1.0;
    Parts parts;
    rep.achieved =
        eval_reverse(M, E, rep.coeffs, nullptr, tail_lo, lc, 2.0, &parts);
    rep.grad_part = parts.grad;
    rep.pot_part = parts.pot;
    rep.norm_part = parts.norm;
    rep.upper = 1.0;  // lambda_cut |u|_2 <= |sqrt(L) u|_2 on the tail
    rep.method = "closed-form(sq-sum)";
    return rep;
  }
  if (M.coefficient_space()) check_quadrature_exponent(M, q);

  const BandMaps B = band_maps(M, E, tail_lo, tail_hi);
  RatioProblem P;
  P.scale = lc;
  P.is_complex = cfg.complex_coefficients;
  P.half = m;
  const double qc = cap_exponent(q);
  P.num.push_back({B.value, B.w_value, qc});
  P.den.push_back({B.grad, B.w_grad, qc});
  if (B.pot.rows > 0) P.den.push_back({B.pot, B.w_value, qc});

  const int dim = P.is_complex ? 2 * m : m;
  const int partner_abs = degenerate_partner(E.lambda_sq, tail_lo);
  const int partner = (partner_abs >= tail_lo && partner_abs <= tail_hi)
                          ? partner_abs - tail_lo
                          : -1;
  auto exact = [&](const Vec& c) {
    if (P.is_complex) {
      Vec re, im;
      split_complex(c, m, &re, &im);
      return eval_reverse(M, E, re, &im, tail_lo, lc, q, nullptr);
    }
    return eval_reverse(M, E, c, nullptr, tail_lo, lc, q, nullptr);
  };
  const AscentResult R = run_ascent(P, dim, 0, partner, cfg, exact);
  rep.achieved = R.value;
  Parts parts;
  if (P.is_complex) {
    split_complex(R.best, m, &rep.coeffs, &rep.coeffs_im);
    eval_reverse(M, E, rep.coeffs, &rep.coeffs_im, tail_lo, lc, q, &parts);
  } else {
    rep.coeffs = R.best;
    eval_reverse(M, E, rep.coeffs, nullptr, tail_lo, lc, q, &parts);
  }
  rep.grad_part = parts.grad;
  rep.pot_part = parts.pot;
  rep.norm_part = parts.norm;
  rep.upper = 0.0;  // no operator certificate against the gradient form
  rep.method = ascent_method(R, "");
  return rep;
}

RatioReport max_lp_lq_ratio(const ModelOperator& M, const EigenSystem& E,
                            int count, double p, double q,
                            const OptimizerConfig& cfg) {
  require(count >= 1 && count <= E.modes(), "max_lp_lq_ratio: bad band size");
  require(!cfg.complex_coefficients,
          "max_lp_lq_ratio: the mixed-norm search is real-coefficient only");
  const double lt = E.lambda(count - 1);
  if (lt <= 0.0)
    throw SingularSpectrumError("max_lp_lq_ratio: band-edge eigenvalue vanishes");
  if (M.coefficient_space()) {
    check_quadrature_exponent(M, p);
    check_quadrature_exponent(M, q);
  }
  const double inv_p = std::isinf(p) ? 0.0 : 1.0 / p;
  const double inv_q = std::isinf(q) ? 0.0 : 1.0 / q;
  const double e = 1.0 + std::fabs(inv_p - inv_q);
  const double lpow = std::pow(lt, e);
  RatioReport rep;
  rep.lambda_top = lt;

  const BandMaps B = band_maps(M, E, 0, count - 1);
  RatioProblem P;
  P.scale = 1.0 / lpow;
  P.square_num = (q == 2.0);
  P.num.push_back({B.grad, B.w_grad, cap_exponent(q)});
  if (B.pot.rows > 0) P.num.push_back({B.pot, B.w_value, cap_exponent(q)});
  P.den.push_back({B.value, B.w_value, cap_exponent(p)});

  const int anchor = count - 1;
  const int partner_abs = count >= 2 ? degenerate_partner(E.lambda_sq, anchor) : -1;
  const int partner = (partner_abs >= 0 && partner_abs < count) ? partner_abs : -1;
  auto exact = [&](const Vec& c) { return eval_lplq(M, E, c, lpow, p, q, nullptr); };
  const AscentResult R = run_ascent(P, count, anchor, partner, cfg, exact);
  rep.achieved = R.value;
  rep.coeffs = R.best;
  Parts parts;
  eval_lplq(M, E, rep.coeffs, lpow, p, q, &parts);
  rep.grad_part = parts.grad;
  rep.pot_part = parts.pot;
  rep.norm_part = parts.norm;

  std::string cert;
  if (!M.coefficient_space()) {
    const Matrix Bg = band_operator(B.grad, B.Vband, M.weights);
    double up = numerics::opnorm(Bg, M.edge_weights, M.weights, p, q).upper;
    if (B.pot.rows > 0) {
      const Matrix Bw = band_operator(B.pot, B.Vband, M.weights);
      up += numerics::opnorm(Bw, M.weights, M.weights, p, q).upper;
    }
    rep.upper = up / lpow;
    cert = "opnorm-certificate";
  }
  rep.method = ascent_method(R, cert);
  return rep;
}

NormBounds band_gradient_norm(const ModelOperator& M, const EigenSystem& E,
                              int count, double p, double q,
                              const numerics::OpNormOptions& opts) {
  require(count >= 1 && count <= E.modes(), "band_gradient_norm: bad band size");
  if (M.coefficient_space() && (p != 2.0 || q != 2.0))
    throw UnsupportedError("band_gradient_norm outside 2->2 needs a grid model");
  const Matrix Vband = take_cols(E.vectors, 0, count);
  const Matrix Bg = band_operator(mul(M.D, Vband), Vband, M.weights);
  const Vec w_out = M.edge_weights.empty()
                        ? Vec(static_cast<std::size_t>(Bg.rows), 1.0)
                        : M.edge_weights;
  return numerics::opnorm(Bg, w_out, M.weights, p, q, opts);
}

SlopeFit fit_slope(const Vec& lambda_top, const Vec& values) {
  require(lambda_top.size() == values.size() && lambda_top.size() >= 2,
          "fit_slope: need matching sweeps with at least two points");
  SlopeFit fit;
  const int n = static_cast<int>(values.size());
  fit.log_lambda.resize(n);
  fit.log_value.resize(n);
  for (int i = 0; i < n; ++i) {
    require(lambda_top[i] > 0.0 && values[i] > 0.0,
            "fit_slope: values must be positive for a log-log fit");
    fit.log_lambda[i] = std::log(lambda_top[i]);
    fit.log_value[i] = std::log(values[i]);
  }
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += fit.log_lambda[i];
    my += fit.log_value[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    sxx += (fit.log_lambda[i] - mx) * (fit.log_lambda[i] - mx);
    sxy += (fit.log_lambda[i] - mx) * (fit.log_value[i] - my);
  }
  require(sxx > 0.0, "fit_slope: degenerate abscissa");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  for (int i = 0; i < n; ++i) {
    const double pred = fit.intercept + fit.slope * fit.log_lambda[i];
    fit.residual = std::max(fit.residual, std::fabs(pred - fit.log_value[i]));
  }
  return fit;
}

namespace {

// Shared machinery for the t/h sweeps: exponent 2 is the exact spectral value
// with the potential folded in by the energy identity; grid models assemble
// D g(L) and sqrt(W) g(L) from mode maps precomputed once per sweep; the
// coefficient-space oscillator goes through quadrature norms of sampled
// kernel tables at exponents 1 and inf.
struct ScanEngine {
  const ModelOperator& M;
  const EigenSystem& E;
  double p;
  numerics::OpNormOptions opts;
  Matrix DP, SW;     // grid maps (rows indexed by field point, cols by mode)
  Matrix S, Sg, Sx;  // oscillator sampled maps
  bool osc = false;

  ScanEngine(const ModelOperator& M_, const EigenSystem& E_, double p_,
             const numerics::OpNormOptions& o)
      : M(M_), E(E_), p(p_), opts(o) {
    if (p == 2.0) return;
    if (!M.coefficient_space()) {
      DP = mul(M.D, E.vectors);
      if (M.has_potential()) SW = scale_rows(E.vectors, sqrt_potential(M));
      return;
    }
    check_quadrature_exponent(M, p);
    osc = true;
    S = mul(M.sample, E.vectors);
    Sg = mul(M.sample_up, mul(M.D, E.vectors));
    Sx = mul(M.sample_up, mul(M.X, E.vectors));
  }

  ScanPoint at(double param, const Vec& symbol, double weight) const {
    ScanPoint pt;
    pt.param = param;
    if (p == 2.0) {
      // |sqrt(L) g(L)|_{2->2} = max_k lambda_k g_k, potential folded in
      double best = 0.0;
      for (int k = 0; k < E.modes(); ++k)
        best = std::max(best, E.lambda(k) * std::fabs(symbol[k]));
      pt.grad_norm = best;
      pt.pot_norm = 0.0;
      pt.value = weight * best;
      return pt;
    }
    if (!osc) {
      const Matrix Ag = numerics::assemble_operator(DP, E, symbol);
      pt.grad_norm =
          numerics::opnorm(Ag, M.edge_weights, M.weights, p, p, opts).value();
      if (SW.rows > 0) {
        const Matrix Aw = numerics::assemble_operator(SW, E, symbol);
        pt.pot_norm =
            numerics::opnorm(Aw, M.weights, M.weights, p, p, opts).value();
      }
    } else {
      pt.grad_norm = quad_norm(sandwich(Sg, S, symbol), M.grid.w, M.grid.w, p);
      pt.pot_norm = quad_norm(sandwich(Sx, S, symbol), M.grid.w, M.grid.w, p);
    }
    pt.value = weight * (pt.grad_norm + pt.pot_norm);
    return pt;
  }
};

Vec symbol_of(const EigenSystem& E, const std::function<double(double)>& g) {
  Vec s(E.modes());
  for (int k = 0; k < E.modes(); ++k) s[k] = g(E.lambda_sq[k]);
  return s;
}

}  // namespace

std::vector<ScanPoint> semiclassical_scan(const ModelOperator& M,
                                          const EigenSystem& E,
                                          const MultiplierSpec& psi, const Vec& hs,
                                          double p,
                                          const numerics::OpNormOptions& opts) {
  require(!hs.empty(), "semiclassical_scan: empty sweep");
  for (const double h : hs)
    require(h > 0.0 && std::isfinite(h), "semiclassical_scan: h must be positive");
  const ScanEngine eng(M, E, p, opts);
  std::vector<ScanPoint> out(hs.size());
  parallel_for(hs.size(), sweep_threads(), [&](std::size_t i) {
    const Vec s = symbol_of(E, [&](double l2) { return psi(hs[i] * l2); });
    out[i] = eng.at(hs[i], s, std::sqrt(hs[i]));
  });
  return out;
}

std::vector<ScanPoint> regularity_scan(const ModelOperator& M,
                                       const EigenSystem& E, const Vec& ts,
                                       double p,
                                       const numerics::OpNormOptions& opts) {
  require(!ts.empty(), "regularity_scan: empty sweep");
  for (const double t : ts)
    require(t > 0.0 && std::isfinite(t), "regularity_scan: t must be positive");
  const ScanEngine eng(M, E, p, opts);
  std::vector<ScanPoint> out(ts.size());
  parallel_for(ts.size(), sweep_threads(), [&](std::size_t i) {
    const Vec s = symbol_of(E, [&](double l2) { return std::exp(-ts[i] * l2); });
    out[i] = eng.at(ts[i], s, std::sqrt(ts[i]));
  });
  return out;
}

std::vector<ReverseScanPoint> semiclassical_reverse_scan(
    const ModelOperator& M, const EigenSystem& E, const MultiplierSpec& psi,
    const Vec& hs, double q, int random_trials, std::uint64_t seed,
    const numerics::OpNormOptions& opts) {
  require(!hs.empty(), "semiclassical_reverse_scan: empty sweep");
  if (!psi.vanishes_near_zero())
    throw PreconditionError(
        "semiclassical_reverse_scan: psi must vanish near zero so that "
        "psi(x)/sqrt(x) stays bounded");
  if (q != 2.0 && M.coefficient_space()) check_quadrature_exponent(M, q);
  const double l2floor = 1e-12 * std::max(1.0, E.lambda_sq.back());

  Matrix S;
  if (M.coefficient_space() && q != 2.0) S = mul(M.sample, E.vectors);

  std::vector<ReverseScanPoint> out;
  out.reserve(hs.size());
  Rng rng(seed);
  for (const double h : hs) {
    require(h > 0.0 && std::isfinite(h),
            "semiclassical_reverse_scan: h must be positive");
    ReverseScanPoint pt;
    pt.h = h;
    const double sh = std::sqrt(h);

    Vec s(static_cast<std::size_t>(E.modes()), 0.0);
    for (int k = 0; k < E.modes(); ++k)
      if (E.lambda_sq[k] > l2floor) s[k] = psi(h * E.lambda_sq[k]) / E.lambda(k);
    if (q == 2.0) {
      double best = 0.0;
      for (const double sv : s) best = std::max(best, std::fabs(sv));
      pt.operator_value = best / sh;
    } else if (!M.coefficient_space()) {
      const Matrix T = numerics::assemble_operator(E, s);
      pt.operator_value =
          numerics::opnorm(T, M.weights, M.weights, q, q, opts).value() / sh;
    } else {
      pt.operator_value =
          quad_norm(sandwich(S, S, s), M.grid.w, M.grid.w, q) / sh;
    }

    // random witnesses of the inequality itself, gradient form on the right
    for (int trial = 0; trial < random_trials; ++trial) {
      const Vec c = rng.unit_vector(E.modes());
      Vec pc(static_cast<std::size_t>(E.modes()));
      for (int k = 0; k < E.modes(); ++k) pc[k] = psi(h * E.lambda_sq[k]) * c[k];
      const Vec u = synthesize(E, c, 0);
      const Vec pu = synthesize(E, pc, 0);
      const double den = sh * combine(M.grad_lp(u, q), M.sqrtW_lp(u, q), q);
      if (den <= 1e-300) continue;
      pt.random_max = std::max(pt.random_max, M.lp(pu, q) / den);
    }
    out.push_back(pt);
  }
  return out;
}

EquivalenceAudit psi_equivalence_audit(const ModelOperator& M,
                                       const EigenSystem& E,
                                       const MultiplierSpec& psi1,
                                       const MultiplierSpec& psi2, const Vec& hs,
                                       double p,
                                       const numerics::OpNormOptions& opts) {
  // profiles that both vanish near zero are reverse-admissible and are
  // compared through the reverse sweep; any other pair goes forward
  const bool reverse =
      psi1.vanishes_near_zero() && psi2.vanishes_near_zero();
  auto sweep_sup = [&](const MultiplierSpec& psi) {
    double sup = 0.0;
    if (reverse) {
      for (const auto& pt :
           semiclassical_reverse_scan(M, E, psi, hs, p, 0, 0, opts))
        sup = std::max(sup, pt.operator_value);
    } else {
      for (const auto& pt : semiclassical_scan(M, E, psi, hs, p, opts))
        sup = std::max(sup, pt.value);
    }
    return sup;
  };
  EquivalenceAudit audit;
  audit.sup_1 = sweep_sup(psi1);
  audit.sup_2 = sweep_sup(psi2);
  audit.ratio_12 =
      audit.sup_2 > 0.0 ? audit.sup_1 / audit.sup_2 : (audit.sup_1 > 0.0 ? kInf : 0.0);
  audit.ratio_21 =
      audit.sup_1 > 0.0 ? audit.sup_2 / audit.sup_1 : (audit.sup_2 > 0.0 ? kInf : 0.0);
  return audit;
}

}  // namespace bernlab::bernstein
