#pragma once

// Per-period similarity matrices (regularized Laplacian plus a weighted
// covariate term) and their one-sided kernel smoothing over time.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cascdc/linalg.hpp"
#include "cascdc/sbm.hpp"
#include "cascdc/types.hpp"

namespace cascdc {

struct LaplacianResult {
  Matrix L;
  double tau = 0.0;
  bool degenerate = false;  ///< empty graph: L = 0, tau = 0
};

/// L = D_tau^{-1/2} A D_tau^{-1/2} with tau = mean degree.
inline LaplacianResult regularized_laplacian(const Matrix& a) {
  require_square(a, "regularized_laplacian");
  const Index n = a.rows();
  LaplacianResult out;
  out.L = Matrix::Zero(n, n);
  if (n == 0) {
    out.degenerate = true;
    return out;
  }
  const Vector deg = a.rowwise().sum();
  out.tau = deg.mean();
  if (out.tau == 0.0) {
    out.degenerate = true;
    return out;
  }
  Vector dinv(n);
  for (Index i = 0; i < n; ++i) dinv(i) = 1.0 / std::sqrt(deg(i) + out.tau);
  out.L = dinv.asDiagonal() * a * dinv.asDiagonal();
  return out;
}

struct CovariateComponent {
  Matrix W;   ///< R x R, X' L X
  Matrix Cw;  ///< N x N, X W X'; may be indefinite
};

inline CovariateComponent covariate_component(const Matrix& x, const Matrix& l) {
  require_square(l, "covariate_component");
  if (x.rows() != l.rows())
    throw DimensionError("covariate_component: X has " + std::to_string(x.rows()) + " rows, L is " + std::to_string(l.rows()));
  CovariateComponent out;
  out.W = x.transpose() * l * x;
  out.W = 0.5 * (out.W + out.W.transpose());
  out.Cw = x * out.W * x.transpose();
  out.Cw = 0.5 * (out.Cw + out.Cw.transpose());
  return out;
}

/// Eigenvalue quantities behind the balance parameter.
struct AlphaParts {
  double eigengap = 0.0;      ///< lambda_K(L) - lambda_{K+1}(L), algebraic order
  double covariate_top = 0.0; ///< largest |eigenvalue| of Cw
  double alpha = 0.0;
};

inline AlphaParts alpha_parts(const Matrix& l, const Matrix& cw, int K) {
  require_square(l, "tune_alpha");
  if (K < 1 || K >= l.rows())
    throw ConfigError("tune_alpha: need 1 <= K < N, got K=" + std::to_string(K) + " N=" + std::to_string(l.rows()));
  if (cw.rows() != l.rows() || cw.cols() != l.cols()) throw DimensionError("tune_alpha: L and Cw shapes differ");
  AlphaParts p;
  const Vector ev = linalg::eigenvalues_descending(l);
  p.eigengap = ev(K - 1) - ev(K);
  p.covariate_top = linalg::abs_top_eigenvalue(cw);
  if (p.covariate_top == 0.0) return p;
  p.alpha = std::max(0.0, p.eigengap / p.covariate_top);
  return p;
}

/// alpha = (lambda_K(L) - lambda_{K+1}(L)) / |lambda_1(Cw)|, clamped at 0;
/// 0 when Cw vanishes.
inline double tune_alpha(const Matrix& l, const Matrix& cw, int K) { return alpha_parts(l, cw, K).alpha; }

/// Discrete one-sided boundary kernel on F_r = {-r, ..., 0}.
struct KernelWeights {
  int order = 0;            ///< requested l
  int effective_order = 0;  ///< min(l, r)
  int radius = 0;
  std::vector<double> weights;  ///< weights[k] is W(k - r)
  double w_max = 0.0;

  double at(int offset) const { return weights.at(static_cast<std::size_t>(offset + radius)); }
  int size() const { return radius + 1; }
};

/// Solves the moment system (1/|F_r|) sum_i i^k W(i) = [k == 0], k = 0..min(l,r),
/// for W(i) a polynomial of degree min(l,r). Works on the rescaled grid
/// u = i / r, which satisfies the same conditions, via a long-double QR.
inline KernelWeights kernel_weights(int r, int l) {
  if (r < 0 || l < 0) throw ConfigError("kernel_weights: r and l must be non-negative");
  KernelWeights kw;
  kw.order = l;
  kw.radius = r;
  kw.effective_order = std::min(l, r);
  const int m = kw.effective_order + 1;
  const int n = r + 1;
  using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using LVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  LMatrix v(n, m);
  for (int row = 0; row < n; ++row) {
    const long double u = r == 0 ? 0.0L : static_cast<long double>(row - r) / static_cast<long double>(r);
    long double p = 1.0L;
    for (int c = 0; c < m; ++c) {
      v(row, c) = p;
      p *= u;
    }
  }
  // W = V a with V' W = n e0  =>  W = n Q R^{-T} e0.
  Eigen::HouseholderQR<LMatrix> qr(v);
  const LMatrix R = qr.matrixQR().topLeftCorner(m, m).template triangularView<Eigen::Upper>();
  LVector e0 = LVector::Zero(m);
  e0(0) = static_cast<long double>(n);
  const LVector y = R.transpose().template triangularView<Eigen::Lower>().solve(e0);
  const LMatrix q = qr.householderQ() * LMatrix::Identity(n, m);
  LVector w = q * y;
  // One step of refinement against the moment residual.
  const LVector resid = e0 - v.transpose() * w;
  const LVector dy = R.transpose().template triangularView<Eigen::Lower>().solve(resid);
  w += q * dy;
  kw.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    kw.weights[static_cast<std::size_t>(i)] = static_cast<double>(w(i));
    kw.w_max = std::max(kw.w_max, std::abs(kw.weights[static_cast<std::size_t>(i)]));
  }
  return kw;
}

/// Everything computed per period from one adjacency slice and X.
struct SimilaritySeries {
  int K = 0;
  std::vector<Matrix> laplacians;
  std::vector<Matrix> covariate_weights;     ///< W_t
  std::vector<Matrix> covariate_components;  ///< C^w_t
  std::vector<double> alphas;
  std::vector<Matrix> similarities;          ///< S_t
  std::vector<double> regularizers;          ///< tau_t
  std::vector<char> degenerate;              ///< empty-graph periods
  std::vector<double> eigengaps;             ///< cached for alpha
  std::vector<double> covariate_tops;        ///< cached for alpha

  int periods() const { return static_cast<int>(similarities.size()); }
  int nodes() const { return similarities.empty() ? 0 : static_cast<int>(similarities.front().rows()); }
  const Matrix& at(int t) const { return similarities.at(static_cast<std::size_t>(t)); }

  /// Series of arbitrary similarity matrices (tests, oracles, population inputs).
  static SimilaritySeries from_matrices(std::vector<Matrix> s, int K = 0) {
    SimilaritySeries out;
    out.K = K;
    out.similarities = std::move(s);
    return out;
  }
};

/// Builds S_t = L_tau,t + alpha_t C^w_t for every period. With
/// `use_covariates` false (or X without columns), alpha_t = 0 and S_t = L_tau,t.
inline SimilaritySeries build_series(const DynamicNetwork& net, const CovariateMatrix& x, int K, bool use_covariates = true) {
  const int N = net.nodes();
  if (x.cols() > 0 && x.rows() != N) throw DimensionError("build_series: covariate rows do not match node count");
  if (K < 1 || K >= N) throw ConfigError("build_series: need 1 <= K < N, got K=" + std::to_string(K) + " N=" + std::to_string(N));
  const bool covariates = use_covariates && x.cols() > 0;
  SimilaritySeries s;
  s.K = K;
  for (int t = 0; t < net.periods(); ++t) {
    LaplacianResult lr = regularized_laplacian(net.at(t));
    CovariateComponent cc;
    AlphaParts ap;
    if (covariates) {
      cc = covariate_component(x.values(), lr.L);
      ap = alpha_parts(lr.L, cc.Cw, K);
    } else {
      cc.W = Matrix::Zero(x.cols(), x.cols());
      cc.Cw = Matrix::Zero(N, N);
      const Vector ev = linalg::eigenvalues_descending(lr.L);
      ap.eigengap = ev(K - 1) - ev(K);
    }
    Matrix st = lr.L;
    if (ap.alpha > 0.0) st += ap.alpha * cc.Cw;
    s.laplacians.push_back(std::move(lr.L));
    s.regularizers.push_back(lr.tau);
    s.degenerate.push_back(lr.degenerate ? 1 : 0);
    s.covariate_weights.push_back(std::move(cc.W));
    s.covariate_components.push_back(std::move(cc.Cw));
    s.alphas.push_back(ap.alpha);
    s.eigengaps.push_back(ap.eigengap);
    s.covariate_tops.push_back(ap.covariate_top);
    s.similarities.push_back(std::move(st));
  }
  return s;
}

enum class EdgePolicy {
  Shrink,  ///< use r = t when fewer than r past periods exist
  Strict,  ///< throw RangeError instead
};

/// (1/|F_r|) sum_{i in F_r} W(i) S_{t+i}.
inline Matrix smoothed_similarity(const SimilaritySeries& series, int t, const KernelWeights& kw,
                                  EdgePolicy policy = EdgePolicy::Shrink) {
  if (t < 0 || t >= series.periods()) throw RangeError("smoothed_similarity: period " + std::to_string(t) + " out of range");
  const KernelWeights* use = &kw;
  KernelWeights shrunk;
  if (kw.radius > t) {
    if (policy == EdgePolicy::Strict)
      throw RangeError("smoothed_similarity: radius " + std::to_string(kw.radius) + " needs " + std::to_string(kw.radius) +
                       " past periods, only " + std::to_string(t) + " available");
    shrunk = kernel_weights(t, kw.order);
    use = &shrunk;
  }
  const int r = use->radius;
  Matrix out = Matrix::Zero(series.at(t).rows(), series.at(t).cols());
  for (int i = -r; i <= 0; ++i) out += use->at(i) * series.at(t + i);
  out /= static_cast<double>(r + 1);
  return 0.5 * (out + out.transpose());
}

enum class BandwidthNorm { Spectral, Frobenius };

/// Largest r <= r_max such that every smaller rho passes
/// ||S^_{t,r} - S^_{t,rho}|| <= 4 W_max sqrt(N ||S_t||_inf / max(rho, 1)).
/// Scans upward from 0 and stops at the first failing r.
inline int lepski_bandwidth(const SimilaritySeries& series, int t, int l, int r_max,
                            BandwidthNorm norm = BandwidthNorm::Spectral) {
  if (t < 0 || t >= series.periods()) throw RangeError("lepski_bandwidth: period out of range");
  r_max = std::max(0, std::min({r_max, t, series.periods() / 2}));
  if (r_max == 0) return 0;
  const double n = static_cast<double>(series.nodes());
  const double sup = linalg::max_abs_entry(series.at(t));
  std::vector<Matrix> est;
  est.reserve(static_cast<std::size_t>(r_max) + 1);
  est.push_back(series.at(t));
  int best = 0;
  for (int r = 1; r <= r_max; ++r) {
    const KernelWeights kw = kernel_weights(r, l);
    est.push_back(smoothed_similarity(series, t, kw));
    bool ok = true;
    for (int rho = 0; rho < r && ok; ++rho) {
      const Matrix diff = est[static_cast<std::size_t>(r)] - est[static_cast<std::size_t>(rho)];
      const double lhs = norm == BandwidthNorm::Spectral ? linalg::spectral_norm_symmetric(diff) : linalg::frobenius_norm(diff);
      const double rhs = 4.0 * kw.w_max * std::sqrt(n * sup / static_cast<double>(std::max(rho, 1)));
      ok = lhs <= rhs;
    }
    if (!ok) break;
    best = r;
  }
  return best;
}

}  // namespace cascdc
