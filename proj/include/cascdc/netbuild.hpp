#pragma once

// Networks from asset data: adaptive-Lasso return links, shared-attribute
// (contract) links, and centrality scores.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cascdc/lasso.hpp"
#include "cascdc/sbm.hpp"
#include "cascdc/types.hpp"

namespace cascdc {

/// Daily returns, dates x assets. NaN marks days outside an asset's active
/// range; gaps inside the range are filled with a zero return and listed in
/// `filled`.
struct ReturnPanel {
  std::vector<std::string> dates;
  std::vector<std::string> assets;
  Matrix returns;
  std::vector<std::pair<Index, Index>> filled;  ///< (row, column) of filled gaps
  bool standardized = false;

  int days() const { return static_cast<int>(returns.rows()); }
  int size() const { return static_cast<int>(returns.cols()); }

  bool active(Index col, Index begin, Index end) const {
    for (Index r = begin; r < end; ++r)
      if (std::isnan(returns(r, col))) return false;
    return true;
  }

  /// Fills interior gaps (NaN between the first and last observation) with 0.
  void fill_gaps() {
    for (Index c = 0; c < returns.cols(); ++c) {
      Index first = -1, last = -1;
      for (Index r = 0; r < returns.rows(); ++r)
        if (!std::isnan(returns(r, c))) {
          if (first < 0) first = r;
          last = r;
        }
      if (first < 0) continue;
      for (Index r = first; r <= last; ++r)
        if (std::isnan(returns(r, c))) {
          returns(r, c) = 0.0;
          filled.emplace_back(r, c);
        }
    }
  }

  Index date_index(const std::string& d) const {
    const auto it = std::find(dates.begin(), dates.end(), d);
    return it == dates.end() ? -1 : static_cast<Index>(it - dates.begin());
  }
};

/// Half-open row range [begin, end).
struct Window {
  Index begin = 0;
  Index end = 0;
  Index length() const { return end - begin; }
};

inline constexpr int kMinimumWindow = 60;

struct LassoFit {
  int target = -1;
  std::vector<int> predictors;  ///< asset index of each coefficient (all assets but the target)
  Vector coefficients;
  double intercept = 0.0;
  double lambda = 0.0;
  std::vector<int> selected;    ///< asset indices with |coefficient| > 1e-10
  Vector weights;               ///< adaptive penalty weights, aligned with predictors
  bool degenerate = false;
};

struct LassoFitConfig {
  lasso::Config lasso;
  int min_window = kMinimumWindow;
  bool standardize = true;
};

/// Regresses the target's in-window returns on every other asset that is
/// active over the whole window. Columns are standardized inside the window.
inline LassoFit adaptive_lasso_fit(const ReturnPanel& panel, int target, Window window, const LassoFitConfig& cfg = {}) {
  if (target < 0 || target >= panel.size()) throw ConfigError("adaptive_lasso_fit: target index out of range");
  if (window.begin < 0 || window.end > panel.days() || window.length() <= 0)
    throw RangeError("adaptive_lasso_fit: window outside the panel");
  if (window.length() < cfg.min_window)
    throw RangeError("adaptive_lasso_fit: window of " + std::to_string(window.length()) + " observations is shorter than " +
                     std::to_string(cfg.min_window));
  if (!panel.active(target, window.begin, window.end))
    throw RangeError("adaptive_lasso_fit: target " + panel.assets[static_cast<std::size_t>(target)] + " inactive in window");
  const Index n = window.length();
  LassoFit fit;
  fit.target = target;
  for (int j = 0; j < panel.size(); ++j)
    if (j != target) fit.predictors.push_back(j);
  const Index p_all = static_cast<Index>(fit.predictors.size());
  fit.coefficients = Vector::Zero(p_all);
  fit.weights = Vector::Zero(p_all);

  auto column = [&](int asset, double& mean, double& sd) {
    Vector v = panel.returns.block(window.begin, asset, n, 1);
    mean = v.mean();
    const double var = n > 1 ? (v.array() - mean).square().sum() / static_cast<double>(n - 1) : 0.0;
    sd = std::sqrt(var);
    v.array() -= mean;
    if (cfg.standardize && sd > 0.0) v /= sd;
    return v;
  };

  double ymean = 0.0, ysd = 0.0;
  const Vector y = column(target, ymean, ysd);
  if (!(ysd > 0.0)) {
    fit.degenerate = true;
    fit.intercept = cfg.standardize ? 0.0 : ymean;
    return fit;
  }
  std::vector<Index> usable;
  std::vector<double> means;
  Matrix x(n, p_all);
  for (Index k = 0; k < p_all; ++k) {
    const int asset = fit.predictors[static_cast<std::size_t>(k)];
    if (!panel.active(asset, window.begin, window.end)) continue;
    double m = 0.0, sd = 0.0;
    Vector v = column(asset, m, sd);
    if (!(sd > 0.0)) continue;
    x.col(static_cast<Index>(usable.size())) = v;
    usable.push_back(k);
    means.push_back(m);
  }
  const Matrix xu = x.leftCols(static_cast<Index>(usable.size()));
  const lasso::Selection sel = lasso::fit(xu, y, cfg.lasso);
  fit.lambda = sel.lambda;
  double shift = 0.0;
  for (std::size_t u = 0; u < usable.size(); ++u) {
    const Index k = usable[u];
    fit.coefficients(k) = sel.coefficients(static_cast<Index>(u));
    fit.weights(k) = sel.weights(static_cast<Index>(u));
    shift += fit.coefficients(k) * means[u];
  }
  fit.intercept = cfg.standardize ? 0.0 : ymean - shift;
  for (Index k = 0; k < p_all; ++k)
    if (std::abs(fit.coefficients(k)) > 1e-10) fit.selected.push_back(fit.predictors[static_cast<std::size_t>(k)]);
  return fit;
}

enum class Symmetrization { Or, And };
enum class WindowMode { Rolling, Expanding };

struct ReturnNetworkConfig {
  LassoFitConfig fit;
  int window = kMinimumWindow;
  int step = 1;
  WindowMode mode = WindowMode::Rolling;
  Symmetrization symmetrization = Symmetrization::Or;
};

struct ReturnNetwork {
  DynamicNetwork network;
  std::vector<std::string> period_end_dates;
  /// (period, asset) pairs whose fit failed; those nodes are isolated.
  std::vector<std::pair<int, int>> failed_fits;
};

/// One adaptive-Lasso fit per asset per period; links are the selected
/// predictors, symmetrized.
inline ReturnNetwork return_network(const ReturnPanel& panel, const ReturnNetworkConfig& cfg = {}) {
  if (cfg.step < 1) throw ConfigError("return_network: step must be positive");
  if (cfg.window < cfg.fit.min_window) throw ConfigError("return_network: window shorter than the minimum history");
  if (panel.days() < cfg.window)
    throw RangeError("return_network: panel has " + std::to_string(panel.days()) + " days, the first window needs " +
                     std::to_string(cfg.window));
  const int N = panel.size();
  ReturnNetwork out;
  std::vector<Matrix> slices;
  for (Index end = cfg.window; end <= panel.days(); end += cfg.step) {
    const Window w{cfg.mode == WindowMode::Rolling ? end - cfg.window : 0, end};
    Matrix directed = Matrix::Zero(N, N);
    for (int i = 0; i < N; ++i) {
      try {
        const LassoFit f = adaptive_lasso_fit(panel, i, w, cfg.fit);
        for (int j : f.selected) directed(i, j) = 1.0;
      } catch (const Error&) {
        out.failed_fits.emplace_back(static_cast<int>(slices.size()), i);
      }
    }
    Matrix a = Matrix::Zero(N, N);
    for (int i = 0; i < N; ++i)
      for (int j = i + 1; j < N; ++j) {
        const bool link = cfg.symmetrization == Symmetrization::Or ? (directed(i, j) > 0 || directed(j, i) > 0)
                                                                   : (directed(i, j) > 0 && directed(j, i) > 0);
        if (link) a(i, j) = a(j, i) = 1.0;
      }
    slices.push_back(std::move(a));
    out.period_end_dates.push_back(panel.dates[static_cast<std::size_t>(end - 1)]);
  }
  out.network = DynamicNetwork(std::move(slices), panel.assets);
  return out;
}

struct AssetAttributes {
  std::string id;
  std::string algorithm;
  std::vector<std::string> proof_types;
};

using ContractAttributes = std::vector<AssetAttributes>;

inline bool is_unknown(const std::string& v) {
  std::string low;
  for (char c : v) low.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return low.empty() || low == "unknown" || low == "n/a" || low == "na" || low == "none";
}

enum class AttributeField { Combined, Algorithm, ProofType };

/// Edge iff the assets share an algorithm or a proof type (per `field`).
/// Unknown values never match.
inline Matrix contract_adjacency(const ContractAttributes& attrs, AttributeField field = AttributeField::Combined) {
  const Index n = static_cast<Index>(attrs.size());
  Matrix a = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      const AssetAttributes& u = attrs[static_cast<std::size_t>(i)];
      const AssetAttributes& v = attrs[static_cast<std::size_t>(j)];
      bool link = false;
      if (field != AttributeField::ProofType)
        link = !is_unknown(u.algorithm) && u.algorithm == v.algorithm;
      if (!link && field != AttributeField::Algorithm)
        for (const std::string& p : u.proof_types)
          if (!is_unknown(p) && std::find(v.proof_types.begin(), v.proof_types.end(), p) != v.proof_types.end()) {
            link = true;
            break;
          }
      if (link) a(i, j) = a(j, i) = 1.0;
    }
  return a;
}

/// One-hot columns for every known algorithm, then every known proof type,
/// each block in lexicographic order. J = 1.
inline CovariateMatrix covariate_dummies(const ContractAttributes& attrs) {
  std::set<std::string> algos, proofs;
  for (const AssetAttributes& a : attrs) {
    if (!is_unknown(a.algorithm)) algos.insert(a.algorithm);
    for (const std::string& p : a.proof_types)
      if (!is_unknown(p)) proofs.insert(p);
  }
  std::vector<std::string> names;
  std::map<std::string, Index> algo_col, proof_col;
  for (const std::string& a : algos) {
    algo_col[a] = static_cast<Index>(names.size());
    names.push_back("algorithm=" + a);
  }
  for (const std::string& p : proofs) {
    proof_col[p] = static_cast<Index>(names.size());
    names.push_back("proof=" + p);
  }
  Matrix x = Matrix::Zero(static_cast<Index>(attrs.size()), static_cast<Index>(names.size()));
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    const AssetAttributes& a = attrs[i];
    if (!is_unknown(a.algorithm)) x(static_cast<Index>(i), algo_col[a.algorithm]) = 1.0;
    for (const std::string& p : a.proof_types)
      if (!is_unknown(p)) x(static_cast<Index>(i), proof_col[p]) = 1.0;
  }
  std::vector<ColumnKind> kinds(names.size(), ColumnKind::Dummy);
  return CovariateMatrix(std::move(x), std::move(kinds), std::move(names));
}

struct Centrality {
  Vector scores;
  double lambda_max = 0.0;
  bool disconnected = false;
  bool empty = false;
};

/// Connected components of a nonnegative symmetric matrix (label per node).
inline std::vector<int> connected_components(const Matrix& a, int* count = nullptr) {
  const Index n = a.rows();
  std::vector<int> comp(static_cast<std::size_t>(n), -1);
  int c = 0;
  for (Index s = 0; s < n; ++s) {
    if (comp[static_cast<std::size_t>(s)] >= 0) continue;
    std::vector<Index> stack{s};
    comp[static_cast<std::size_t>(s)] = c;
    while (!stack.empty()) {
      const Index u = stack.back();
      stack.pop_back();
      for (Index v = 0; v < n; ++v)
        if (a(u, v) > 0.0 && comp[static_cast<std::size_t>(v)] < 0) {
          comp[static_cast<std::size_t>(v)] = c;
          stack.push_back(v);
        }
    }
    ++c;
  }
  if (count) *count = c;
  return comp;
}

/// Leading eigenvector on the largest connected component (first such
/// component on ties), nonnegative, unit L2 norm; zeros elsewhere.
inline Centrality eigenvector_centrality(const Matrix& a) {
  require_square(a, "eigenvector_centrality");
  if (a.size() > 0 && a.minCoeff() < 0.0) throw ConfigError("eigenvector_centrality: negative weight");
  const Index n = a.rows();
  Centrality out;
  out.scores = Vector::Zero(n);
  if (n == 0 || a.cwiseAbs().maxCoeff() == 0.0) {
    out.empty = true;
    out.disconnected = n > 1;
    return out;
  }
  int ncomp = 0;
  const std::vector<int> comp = connected_components(a, &ncomp);
  std::vector<int> sizes(static_cast<std::size_t>(ncomp), 0);
  for (int c : comp) ++sizes[static_cast<std::size_t>(c)];
  const int giant = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  out.disconnected = ncomp > 1;
  std::vector<Index> idx;
  for (Index i = 0; i < n; ++i)
    if (comp[static_cast<std::size_t>(i)] == giant) idx.push_back(i);
  const Index m = static_cast<Index>(idx.size());
  Matrix sub(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j) sub(i, j) = a(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  Eigen::SelfAdjointEigenSolver<Matrix> es(sub);
  if (es.info() != Eigen::Success) throw NumericalError("eigenvector_centrality: eigen-solver failed");
  out.lambda_max = es.eigenvalues()(m - 1);
  Vector v = es.eigenvectors().col(m - 1);
  if (v.sum() < 0.0) v = -v;
  v = v.cwiseMax(0.0);
  v.normalize();
  for (Index i = 0; i < m; ++i) out.scores(idx[static_cast<std::size_t>(i)]) = v(i);
  return out;
}

/// Neumaier-compensated sum.
inline double compensated_sum(const Vector& v) {
  double sum = 0.0, c = 0.0;
  for (Index i = 0; i < v.size(); ++i) {
    const double t = sum + v(i);
    if (std::abs(sum) >= std::abs(v(i)))
      c += (sum - t) + v(i);
    else
      c += (v(i) - t) + sum;
    sum = t;
  }
  return sum + c;
}

/// Degrees divided by the total degree; uniform 1/N on an empty graph.
inline Centrality degree_centrality_normalized(const Matrix& a) {
  require_square(a, "degree_centrality_normalized");
  const Index n = a.rows();
  Centrality out;
  const Vector deg = a.rowwise().sum();
  const double total = compensated_sum(deg);
  if (total == 0.0) {
    out.empty = true;
    out.scores = n > 0 ? Vector::Constant(n, 1.0 / static_cast<double>(n)) : Vector();
    return out;
  }
  out.scores = deg / total;
  return out;
}

}  // namespace cascdc
