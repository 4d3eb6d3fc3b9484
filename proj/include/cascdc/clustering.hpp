#pragma once

// Dynamic covariate-assisted spectral clustering and its baselines.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "cascdc/kmeans.hpp"
#include "cascdc/linalg.hpp"
#include "cascdc/rng.hpp"
#include "cascdc/sbm.hpp"
#include "cascdc/similarity.hpp"
#include "cascdc/types.hpp"

namespace cascdc {

inline constexpr double kZeroRowThreshold = 1e-12;

struct SpectralEmbedding {
  Matrix U;                        ///< N x K leading eigenvectors
  Vector eigenvalues;              ///< K values, decreasing magnitude
  std::vector<Index> nonzero_rows; ///< rows with norm above the threshold
  Matrix U_plus;                   ///< row-normalized nonzero rows
};

/// Eigenvectors of the K largest-magnitude eigenvalues of S. Rows of S that
/// are identically zero count as zero rows.
inline SpectralEmbedding spectral_embed(const Matrix& s, int K) {
  require_square(s, "spectral_embed");
  if (K < 1 || K >= s.rows())
    throw ConfigError("spectral_embed: need 1 <= K < N, got K=" + std::to_string(K) + " N=" + std::to_string(s.rows()));
  SpectralEmbedding e;
  linalg::EigenPairs p = linalg::top_k_by_magnitude(s, K);
  e.U = std::move(p.vectors);
  e.eigenvalues = std::move(p.values);
  for (Index i = 0; i < e.U.rows(); ++i)
    if (e.U.row(i).norm() > kZeroRowThreshold && s.row(i).cwiseAbs().maxCoeff() > 0.0) e.nonzero_rows.push_back(i);
  e.U_plus = Matrix(static_cast<Index>(e.nonzero_rows.size()), K);
  for (std::size_t r = 0; r < e.nonzero_rows.size(); ++r) {
    const auto row = e.U.row(e.nonzero_rows[r]);
    e.U_plus.row(static_cast<Index>(r)) = row / row.norm();
  }
  return e;
}

inline KMeansResult spherical_kmeans(const SpectralEmbedding& emb, int K, double eps, int restarts, const SeedStream& seed) {
  if (emb.U_plus.rows() < K)
    throw ConfigError("spherical_kmeans: infeasible, N+=" + std::to_string(emb.U_plus.rows()) + " < K=" + std::to_string(K));
  return kmeans(emb.U_plus, K, eps, restarts, seed);
}

/// Full-length labels: clustered rows keep their k-means label, zero rows get
/// the first group.
inline Labels extend_labels(const SpectralEmbedding& emb, const Labels& assignment) {
  Labels out(static_cast<std::size_t>(emb.U.rows()), 0);
  for (std::size_t r = 0; r < emb.nonzero_rows.size(); ++r) out[static_cast<std::size_t>(emb.nonzero_rows[r])] = assignment[r];
  return out;
}

struct ClusterOptions {
  int K = 3;
  double eps = 0.01;
  int kernel_order = 4;
  int restarts = 20;
  std::uint64_t seed = 1;
  int r_max = -1;  ///< -1: floor(T/2)
  BandwidthNorm norm = BandwidthNorm::Spectral;
};

struct PeriodClustering {
  Labels labels;
  bool failed = false;
  bool degenerate_k = false;
  std::string error;
};

/// Embed + spherical k-means + zero-row extension for one matrix. Failures
/// produce all-first-group labels with the flag set.
inline PeriodClustering cluster_matrix(const Matrix& s, const ClusterOptions& opt, const SeedStream& seed) {
  PeriodClustering out;
  try {
    const SpectralEmbedding emb = spectral_embed(s, opt.K);
    const KMeansResult km = spherical_kmeans(emb, opt.K, opt.eps, opt.restarts, seed);
    out.labels = extend_labels(emb, km.assignment);
    out.degenerate_k = km.degenerate_k;
  } catch (const Error& e) {
    out.labels.assign(static_cast<std::size_t>(s.rows()), 0);
    out.failed = true;
    out.error = e.what();
  }
  return out;
}

struct DynamicClustering {
  MembershipSeries membership;
  std::vector<int> r_hat;
  std::vector<double> alphas;
  std::vector<char> failed;
  std::vector<char> degenerate_k;
  std::vector<std::string> errors;
};

/// K == N admits a single partition: every node alone.
inline DynamicClustering forced_partition(int N, int T, const std::vector<double>& alphas = {}) {
  DynamicClustering out;
  Labels l(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) l[static_cast<std::size_t>(i)] = i;
  out.membership = MembershipSeries::constant(l, N, T);
  out.r_hat.assign(static_cast<std::size_t>(T), 0);
  out.alphas = alphas.empty() ? std::vector<double>(static_cast<std::size_t>(T), 0.0) : alphas;
  out.failed.assign(static_cast<std::size_t>(T), 0);
  out.degenerate_k.assign(static_cast<std::size_t>(T), 0);
  out.errors.assign(static_cast<std::size_t>(T), "");
  return out;
}

/// Steps after the similarity series exists: bandwidth, smoothing, embedding,
/// clustering and extension, period by period.
inline DynamicClustering cluster_series(const SimilaritySeries& series, const ClusterOptions& opt) {
  const int T = series.periods();
  if (opt.K == series.nodes()) return forced_partition(series.nodes(), T, series.alphas);
  const SeedStream root(opt.seed);
  const int r_cap = opt.r_max >= 0 ? opt.r_max : T / 2;
  DynamicClustering out;
  std::vector<Labels> labels;
  for (int t = 0; t < T; ++t) {
    const int r = lepski_bandwidth(series, t, opt.kernel_order, std::min(r_cap, t), opt.norm);
    const Matrix s_hat = r == 0 ? series.at(t) : smoothed_similarity(series, t, kernel_weights(r, opt.kernel_order));
    PeriodClustering pc = cluster_matrix(s_hat, opt, root.child("period", static_cast<std::uint64_t>(t)));
    labels.push_back(std::move(pc.labels));
    out.r_hat.push_back(r);
    out.alphas.push_back(series.alphas.empty() ? 0.0 : series.alphas[static_cast<std::size_t>(t)]);
    out.failed.push_back(pc.failed ? 1 : 0);
    out.degenerate_k.push_back(pc.degenerate_k ? 1 : 0);
    out.errors.push_back(std::move(pc.error));
  }
  out.membership = MembershipSeries(std::move(labels), opt.K);
  return out;
}

/// CASC-DC: similarity series from adjacency and covariates, then cluster_series.
inline DynamicClustering casc_dc(const DynamicNetwork& net, const CovariateMatrix& x, const ClusterOptions& opt) {
  if (opt.K == net.nodes()) return forced_partition(net.nodes(), net.periods());
  return cluster_series(build_series(net, x, opt.K, true), opt);
}

/// DSC-PZ: the same pipeline on the regularized Laplacians alone.
inline DynamicClustering dsc_pz_baseline(const DynamicNetwork& net, const ClusterOptions& opt) {
  if (opt.K == net.nodes()) return forced_partition(net.nodes(), net.periods());
  return cluster_series(build_series(net, CovariateMatrix::none(net.nodes()), opt.K, false), opt);
}

struct StaticClustering {
  MembershipSeries membership;  ///< one labeling replicated over every period
  bool degenerate = false;
  std::string note;
};

namespace detail {

inline StaticClustering replicate(const PeriodClustering& pc, int K, int T, bool degenerate, std::string note) {
  StaticClustering out;
  out.membership = MembershipSeries::constant(pc.labels, K, T);
  out.degenerate = degenerate || pc.failed;
  out.note = pc.failed ? pc.error : std::move(note);
  return out;
}

}  // namespace detail

/// DSC-DC: sum of squared adjacency matrices with the diagonal removed,
/// symmetric degree normalization, one static spherical clustering.
inline StaticClustering dsc_dc_baseline(const DynamicNetwork& net, const ClusterOptions& opt) {
  const int N = net.nodes();
  Matrix m = Matrix::Zero(N, N);
  for (const Matrix& a : net.slices()) m += a * a;
  m.diagonal().setZero();
  const Vector deg = m.rowwise().sum();
  Vector dinv = Vector::Zero(N);
  for (Index i = 0; i < N; ++i)
    if (deg(i) > 0.0) dinv(i) = 1.0 / std::sqrt(deg(i));
  const Matrix normalized = dinv.asDiagonal() * m * dinv.asDiagonal();
  const bool empty = deg.sum() == 0.0;
  const PeriodClustering pc = cluster_matrix(normalized, opt, SeedStream(opt.seed).child("dsc-dc"));
  return detail::replicate(pc, opt.K, net.periods(), empty, empty ? "empty network" : "");
}

/// DSC-Cw: spectral clustering of X X' alone.
inline StaticClustering dsc_cw_baseline(const CovariateMatrix& x, int T, const ClusterOptions& opt) {
  const Matrix& v = x.values();
  bool low_rank = true;
  if (v.cols() > 0) {
    Eigen::ColPivHouseholderQR<Matrix> qr(v);
    low_rank = qr.rank() < opt.K;
  }
  const Matrix g = v.cols() > 0 ? Matrix(v * v.transpose()) : Matrix::Zero(x.rows(), x.rows());
  const PeriodClustering pc = cluster_matrix(g, opt, SeedStream(opt.seed).child("dsc-cw"));
  return detail::replicate(pc, opt.K, T, low_rank, low_rank ? "covariate rank below K" : "");
}

struct SelectKResult {
  int K = 1;
  std::vector<int> candidates;
  std::vector<double> scores;  ///< mean held-out squared error per candidate
};

/// Node-pair cross-validation on the similarity matrices. Pairs (i <= j) are
/// split into `folds` random folds; each fold is zeroed (symmetrically), the
/// rest rescaled by 1/(1-p), a rank-K eigen-approximation is fitted, and the
/// squared error on the held-out pairs is averaged over folds and periods.
/// The smallest K within one standard error of the best score is returned.
inline SelectKResult select_k(const SimilaritySeries& series, std::vector<int> k_range, int folds, std::uint64_t seed) {
  if (k_range.empty()) throw ConfigError("select_k: empty k_range");
  if (folds < 2) throw ConfigError("select_k: need at least 2 folds");
  std::sort(k_range.begin(), k_range.end());
  k_range.erase(std::unique(k_range.begin(), k_range.end()), k_range.end());
  const int N = series.nodes();
  for (int k : k_range)
    if (k < 1 || k > N - 1) throw ConfigError("select_k: candidate K=" + std::to_string(k) + " outside [1, N-1]");
  const SeedStream root(seed);
  std::vector<std::vector<double>> cell_err(k_range.size());
  std::vector<std::pair<Index, Index>> pairs;
  for (Index i = 0; i < N; ++i)
    for (Index j = i; j < N; ++j) pairs.emplace_back(i, j);
  int cells = 0;
  for (int t = 0; t < series.periods(); ++t) {
    Engine g = root.child("folds", static_cast<std::uint64_t>(t)).engine();
    std::vector<int> fold_of(pairs.size());
    for (std::size_t p = 0; p < pairs.size(); ++p) fold_of[p] = static_cast<int>(p % static_cast<std::size_t>(folds));
    for (std::size_t p = pairs.size(); p > 1; --p) std::swap(fold_of[p - 1], fold_of[uniform_index(g, p)]);
    const Matrix& s = series.at(t);
    for (int f = 0; f < folds; ++f) {
      Matrix y = s;
      std::size_t held = 0;
      for (std::size_t p = 0; p < pairs.size(); ++p)
        if (fold_of[p] == f) {
          y(pairs[p].first, pairs[p].second) = 0.0;
          y(pairs[p].second, pairs[p].first) = 0.0;
          ++held;
        }
      if (held == 0) continue;
      const double keep = 1.0 - static_cast<double>(held) / static_cast<double>(pairs.size());
      y /= keep;
      Eigen::SelfAdjointEigenSolver<Matrix> es(y);
      if (es.info() != Eigen::Success) throw NumericalError("select_k: eigen-solver failed");
      std::vector<Index> order(static_cast<std::size_t>(N));
      for (Index i = 0; i < N; ++i) order[static_cast<std::size_t>(i)] = i;
      const Vector& vals = es.eigenvalues();
      std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        if (std::abs(vals(a)) != std::abs(vals(b))) return std::abs(vals(a)) > std::abs(vals(b));
        return vals(a) > vals(b);
      });
      for (std::size_t c = 0; c < k_range.size(); ++c) {
        Matrix approx = Matrix::Zero(N, N);
        for (int k = 0; k < k_range[c]; ++k) {
          const Index idx = order[static_cast<std::size_t>(k)];
          approx += vals(idx) * es.eigenvectors().col(idx) * es.eigenvectors().col(idx).transpose();
        }
        double err = 0.0;
        for (std::size_t p = 0; p < pairs.size(); ++p)
          if (fold_of[p] == f) {
            const double d = approx(pairs[p].first, pairs[p].second) - s(pairs[p].first, pairs[p].second);
            err += d * d;
          }
        cell_err[c].push_back(err);
      }
      ++cells;
    }
  }
  SelectKResult out;
  out.candidates = k_range;
  std::size_t best = 0;
  std::vector<double> se(k_range.size(), 0.0);
  for (std::size_t c = 0; c < k_range.size(); ++c) {
    const auto& e = cell_err[c];
    double mean = 0.0, var = 0.0;
    for (double v : e) mean += v;
    mean = cells > 0 ? mean / cells : 0.0;
    for (double v : e) var += (v - mean) * (v - mean);
    if (cells > 1) se[c] = std::sqrt(var / (cells - 1) / cells);
    out.scores.push_back(mean);
    if (mean < out.scores[best]) best = c;
  }
  // One-standard-error rule: the smallest K within one SE of the best score.
  out.K = k_range[best];
  for (std::size_t c = 0; c < best; ++c)
    if (out.scores[c] <= out.scores[best] + se[best]) {
      out.K = k_range[c];
      break;
    }
  return out;
}

}  // namespace cascdc
