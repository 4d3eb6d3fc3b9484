#pragma once

// Dynamic degree-corrected stochastic blockmodel with node covariates:
// domain types, a seeded simulator, and the population similarity matrix.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cascdc/rng.hpp"
#include "cascdc/types.hpp"

namespace cascdc {

/// T slices of symmetric K x K connection probabilities.
class BlockProbabilitySeries {
 public:
  /// f(x, k, k') evaluated at x = t/T for t = 1..T.
  using Generator = std::function<double(double, int, int)>;

  BlockProbabilitySeries() = default;

  explicit BlockProbabilitySeries(std::vector<Matrix> slices, bool assortative = false)
      : slices_(std::move(slices)), assortative_(assortative) {
    validate();
  }

  static BlockProbabilitySeries from_generator(int T, int K, const Generator& f, bool assortative = false) {
    if (T < 1 || K < 1) throw ConfigError("BlockProbabilitySeries: T and K must be positive");
    std::vector<Matrix> slices;
    slices.reserve(static_cast<std::size_t>(T));
    for (int t = 1; t <= T; ++t) {
      const double x = static_cast<double>(t) / static_cast<double>(T);
      Matrix b(K, K);
      for (int k = 0; k < K; ++k)
        for (int l = k; l < K; ++l) b(k, l) = b(l, k) = f(x, k, l);
      slices.push_back(std::move(b));
    }
    BlockProbabilitySeries out(std::move(slices), assortative);
    out.generator_ = f;
    return out;
  }

  /// B_t = (t/T) * base.
  static BlockProbabilitySeries linear_ramp(const Matrix& base, int T, bool assortative = false) {
    require_square(base, "linear_ramp");
    return from_generator(
        T, static_cast<int>(base.rows()), [base](double x, int k, int l) { return x * base(k, l); }, assortative);
  }

  /// The three-group ramp used by the Monte Carlo designs.
  static BlockProbabilitySeries reference_ramp(int T) {
    Matrix base(3, 3);
    base << 0.9, 0.6, 0.3,  //
        0.6, 0.3, 0.4,      //
        0.3, 0.4, 0.8;
    return linear_ramp(base, T);
  }

  static BlockProbabilitySeries constant(const Matrix& b, int T, bool assortative = false) {
    return BlockProbabilitySeries(std::vector<Matrix>(static_cast<std::size_t>(T), b), assortative);
  }

  int periods() const { return static_cast<int>(slices_.size()); }
  int groups() const { return slices_.empty() ? 0 : static_cast<int>(slices_.front().rows()); }
  const Matrix& at(int t) const { return slices_.at(static_cast<std::size_t>(t)); }
  const std::vector<Matrix>& slices() const { return slices_; }
  bool assortative() const { return assortative_; }
  const std::optional<Generator>& generator() const { return generator_; }

 private:
  void validate() const {
    if (slices_.empty()) throw ConfigError("BlockProbabilitySeries: no periods");
    const Index K = slices_.front().rows();
    for (std::size_t t = 0; t < slices_.size(); ++t) {
      const Matrix& b = slices_[t];
      if (b.rows() != K || b.cols() != K) throw DimensionError("BlockProbabilitySeries: slice shape changes over time");
      if (!is_symmetric(b, 0.0)) throw ConfigError("BlockProbabilitySeries: slice " + std::to_string(t) + " not symmetric");
      if (b.minCoeff() < 0.0 || b.maxCoeff() > 1.0)
        throw ConfigError("BlockProbabilitySeries: entries must lie in [0,1]");
      if (assortative_) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(b, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() <= 0.0)
          throw ConfigError("BlockProbabilitySeries: slice " + std::to_string(t) + " flagged assortative but not positive definite");
      }
    }
  }

  std::vector<Matrix> slices_;
  bool assortative_ = false;
  std::optional<Generator> generator_;
};

/// Group labels over time, 0-based.
class MembershipSeries {
 public:
  MembershipSeries() = default;
  MembershipSeries(std::vector<Labels> labels, int K) : labels_(std::move(labels)), K_(K) { validate_shape(); }

  /// Same labels replicated over T periods.
  static MembershipSeries constant(const Labels& labels, int K, int T) {
    return MembershipSeries(std::vector<Labels>(static_cast<std::size_t>(T), labels), K);
  }

  int periods() const { return static_cast<int>(labels_.size()); }
  int nodes() const { return labels_.empty() ? 0 : static_cast<int>(labels_.front().size()); }
  int groups() const { return K_; }
  const Labels& at(int t) const { return labels_.at(static_cast<std::size_t>(t)); }
  const std::vector<Labels>& all() const { return labels_; }

  /// One-hot clustering matrix Z_t (N x K).
  Matrix one_hot(int t) const {
    const Labels& l = at(t);
    Matrix z = Matrix::Zero(static_cast<Index>(l.size()), K_);
    for (std::size_t i = 0; i < l.size(); ++i) z(static_cast<Index>(i), l[i]) = 1.0;
    return z;
  }

  std::vector<int> group_sizes(int t) const {
    std::vector<int> sizes(static_cast<std::size_t>(K_), 0);
    for (int g : at(t)) ++sizes[static_cast<std::size_t>(g)];
    return sizes;
  }

  bool has_empty_group() const {
    for (int t = 0; t < periods(); ++t) {
      const auto sizes = group_sizes(t);
      if (std::find(sizes.begin(), sizes.end(), 0) != sizes.end()) return true;
    }
    return false;
  }

  /// Largest number of label changes between consecutive periods.
  int max_churn() const {
    int worst = 0;
    for (int t = 1; t < periods(); ++t) {
      int moved = 0;
      for (int i = 0; i < nodes(); ++i) moved += at(t)[static_cast<std::size_t>(i)] != at(t - 1)[static_cast<std::size_t>(i)];
      worst = std::max(worst, moved);
    }
    return worst;
  }

 private:
  void validate_shape() const {
    if (K_ < 1) throw ConfigError("MembershipSeries: K must be positive");
    for (const Labels& l : labels_) {
      if (l.size() != labels_.front().size()) throw DimensionError("MembershipSeries: node count changes over time");
      for (int g : l)
        if (g < 0 || g >= K_) throw ConfigError("MembershipSeries: label " + std::to_string(g) + " outside [0,K)");
    }
  }

  std::vector<Labels> labels_;
  int K_ = 0;
};

/// How psi enters the edge probability.
enum class DegreeScale {
  /// theta_i = |G_k| * psi_i, so uniform psi gives P = B (plain blockmodel).
  MeanOne,
  /// theta_i = psi_i, the literal sum-to-one parametrization.
  SumOne,
};

/// Degree weights normalized to sum to one within each group of block_map.
struct DegreeParams {
  Vector psi;
  Labels block_map;
  DegreeScale scale = DegreeScale::MeanOne;

  /// Multiplier used in the edge probability.
  Vector theta() const {
    if (scale == DegreeScale::SumOne) return psi;
    const int K = block_map.empty() ? 0 : *std::max_element(block_map.begin(), block_map.end()) + 1;
    std::vector<int> sizes(static_cast<std::size_t>(K), 0);
    for (int g : block_map) ++sizes[static_cast<std::size_t>(g)];
    Vector th(psi.size());
    for (Index i = 0; i < psi.size(); ++i) th(i) = psi(i) * sizes[static_cast<std::size_t>(block_map[static_cast<std::size_t>(i)])];
    return th;
  }

  void validate(double tol = 1e-12) const {
    if (static_cast<std::size_t>(psi.size()) != block_map.size()) throw DimensionError("DegreeParams: psi/block_map length mismatch");
    if (psi.size() > 0 && psi.minCoeff() <= 0.0) throw ConfigError("DegreeParams: psi must be positive");
    const int K = block_map.empty() ? 0 : *std::max_element(block_map.begin(), block_map.end()) + 1;
    std::vector<double> sums(static_cast<std::size_t>(K), 0.0);
    for (Index i = 0; i < psi.size(); ++i) sums[static_cast<std::size_t>(block_map[static_cast<std::size_t>(i)])] += psi(i);
    for (double s : sums)
      if (std::abs(s - 1.0) > tol) throw ConfigError("DegreeParams: group weights must sum to one");
  }
};

/// T symmetric hollow 0/1 adjacency matrices on a fixed vertex set.
class DynamicNetwork {
 public:
  DynamicNetwork() = default;
  DynamicNetwork(std::vector<Matrix> adjacency, std::vector<std::string> node_ids)
      : adjacency_(std::move(adjacency)), node_ids_(std::move(node_ids)) {
    validate();
  }
  explicit DynamicNetwork(std::vector<Matrix> adjacency) : adjacency_(std::move(adjacency)) {
    const Index n = adjacency_.empty() ? 0 : adjacency_.front().rows();
    for (Index i = 0; i < n; ++i) node_ids_.push_back(std::to_string(i));
    validate();
  }

  int periods() const { return static_cast<int>(adjacency_.size()); }
  int nodes() const { return static_cast<int>(node_ids_.size()); }
  const Matrix& at(int t) const { return adjacency_.at(static_cast<std::size_t>(t)); }
  const std::vector<Matrix>& slices() const { return adjacency_; }
  const std::vector<std::string>& node_ids() const { return node_ids_; }

 private:
  void validate() const {
    for (std::size_t t = 0; t < adjacency_.size(); ++t) {
      const Matrix& a = adjacency_[t];
      if (a.rows() != static_cast<Index>(node_ids_.size()) || a.cols() != a.rows())
        throw DimensionError("DynamicNetwork: period " + std::to_string(t) + " has the wrong shape");
      for (Index i = 0; i < a.rows(); ++i) {
        if (a(i, i) != 0.0) throw ConfigError("DynamicNetwork: nonzero diagonal in period " + std::to_string(t));
        for (Index j = i + 1; j < a.cols(); ++j) {
          if (a(i, j) != a(j, i)) throw ConfigError("DynamicNetwork: asymmetric period " + std::to_string(t));
          if (a(i, j) != 0.0 && a(i, j) != 1.0) throw ConfigError("DynamicNetwork: entries must be 0 or 1");
        }
      }
    }
  }

  std::vector<Matrix> adjacency_;
  std::vector<std::string> node_ids_;
};

enum class ColumnKind { Continuous, Dummy };

/// N x R node attributes, fixed over time.
class CovariateMatrix {
 public:
  CovariateMatrix() = default;
  CovariateMatrix(Matrix values, std::vector<ColumnKind> kinds, std::vector<std::string> names = {})
      : values_(std::move(values)), kinds_(std::move(kinds)), names_(std::move(names)) {
    if (static_cast<Index>(kinds_.size()) != values_.cols()) throw DimensionError("CovariateMatrix: one kind per column required");
    if (!names_.empty() && static_cast<Index>(names_.size()) != values_.cols())
      throw DimensionError("CovariateMatrix: one name per column required");
    for (Index c = 0; c < values_.cols(); ++c)
      if (kinds_[static_cast<std::size_t>(c)] == ColumnKind::Dummy)
        for (Index r = 0; r < values_.rows(); ++r)
          if (values_(r, c) != 0.0 && values_(r, c) != 1.0) throw ConfigError("CovariateMatrix: dummy column holds a non-0/1 value");
    if (values_.size() > 0 && !values_.allFinite()) throw ConfigError("CovariateMatrix: non-finite value");
  }

  /// All-continuous convenience constructor.
  static CovariateMatrix continuous(Matrix values) {
    std::vector<ColumnKind> kinds(static_cast<std::size_t>(values.cols()), ColumnKind::Continuous);
    return CovariateMatrix(std::move(values), std::move(kinds));
  }

  /// N rows, zero columns: "no covariates".
  static CovariateMatrix none(int n) { return CovariateMatrix(Matrix(n, 0), {}); }

  const Matrix& values() const { return values_; }
  const std::vector<ColumnKind>& kinds() const { return kinds_; }
  const std::vector<std::string>& names() const { return names_; }
  int rows() const { return static_cast<int>(values_.rows()); }
  int cols() const { return static_cast<int>(values_.cols()); }
  bool empty() const { return values_.cols() == 0 || values_.cwiseAbs().maxCoeff() == 0.0; }
  /// J: the largest absolute entry.
  double bound() const { return linalg_max_abs(); }

 private:
  double linalg_max_abs() const { return values_.size() == 0 ? 0.0 : values_.cwiseAbs().maxCoeff(); }

  Matrix values_;
  std::vector<ColumnKind> kinds_;
  std::vector<std::string> names_;
};

enum class DegreeMode { Uniform, PowerLaw };
enum class CovariateMode { UniformNoise, GroupDummies };

struct SimConfig {
  int N = 100;
  int T = 10;
  int K = 3;
  int churn = 0;  ///< s: max nodes switching groups per step
  DegreeMode degree_mode = DegreeMode::Uniform;
  DegreeScale degree_scale = DegreeScale::MeanOne;
  CovariateMode covariate_mode = CovariateMode::UniformNoise;
  int covariate_columns = -1;        ///< R; -1 means floor(log N)
  double covariate_range = 10.0;     ///< UniformNoise draws from U(0, range)
  double dummy_flip_probability = 0.0;
  bool assortative = false;
  std::uint64_t seed = 1;

  void validate() const {
    if (K < 1) throw ConfigError("SimConfig: K must be at least 1");
    if (N < K) throw ConfigError("SimConfig: impossible configuration, K=" + std::to_string(K) + " exceeds N=" + std::to_string(N));
    if (T < 1) throw ConfigError("SimConfig: T must be at least 1");
    if (churn < 0 || churn > N) throw ConfigError("SimConfig: churn s must lie in [0, N]");
    if (dummy_flip_probability < 0.0 || dummy_flip_probability > 1.0)
      throw ConfigError("SimConfig: dummy_flip_probability must lie in [0,1]");
  }

  int resolved_covariate_columns() const {
    if (covariate_columns >= 0) return covariate_columns;
    return std::max(1, static_cast<int>(std::floor(std::log(static_cast<double>(N)))));
  }
};

struct SimulatedInstance {
  DynamicNetwork network;
  MembershipSeries membership;
  DegreeParams degrees;
  CovariateMatrix covariates;
  /// Probabilities above one that were clipped.
  long clipped = 0;
};

namespace detail {

inline Labels balanced_labels(int N, int K, Engine& g) {
  Labels labels(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) labels[static_cast<std::size_t>(i)] = i % K;
  for (int i = N - 1; i > 0; --i) std::swap(labels[static_cast<std::size_t>(i)], labels[uniform_index(g, static_cast<std::uint64_t>(i) + 1)]);
  return labels;
}

/// Moves s' ~ U{0..s} distinct nodes to a different group, never emptying a group.
inline Labels churn_step(const Labels& prev, int K, int s, Engine& g) {
  Labels next = prev;
  const int N = static_cast<int>(prev.size());
  if (K < 2 || s == 0) return next;
  const int target = static_cast<int>(uniform_index(g, static_cast<std::uint64_t>(s) + 1));
  std::vector<int> sizes(static_cast<std::size_t>(K), 0);
  for (int l : next) ++sizes[static_cast<std::size_t>(l)];
  std::vector<char> moved(static_cast<std::size_t>(N), 0);
  int done = 0;
  int attempts = 0;
  const int max_attempts = 50 * N + 100;
  while (done < target && attempts < max_attempts) {
    ++attempts;
    const int i = static_cast<int>(uniform_index(g, static_cast<std::uint64_t>(N)));
    if (moved[static_cast<std::size_t>(i)]) continue;
    const int from = next[static_cast<std::size_t>(i)];
    if (sizes[static_cast<std::size_t>(from)] <= 1) continue;  // would empty the group: redraw
    int to = static_cast<int>(uniform_index(g, static_cast<std::uint64_t>(K) - 1));
    if (to >= from) ++to;
    next[static_cast<std::size_t>(i)] = to;
    --sizes[static_cast<std::size_t>(from)];
    ++sizes[static_cast<std::size_t>(to)];
    moved[static_cast<std::size_t>(i)] = 1;
    ++done;
  }
  return next;
}

}  // namespace detail

/// Degree weights for a fixed group assignment.
inline DegreeParams sample_degree_params(const Labels& groups, int K, DegreeMode mode, DegreeScale scale, Engine& g) {
  const Index n = static_cast<Index>(groups.size());
  Vector raw(n);
  for (Index i = 0; i < n; ++i) {
    if (mode == DegreeMode::Uniform) {
      raw(i) = 1.0;
    } else {
      // Pareto with scale 1 and shape 2 by inversion.
      const double u = uniform01(g);
      raw(i) = 1.0 / std::sqrt(1.0 - u);
    }
  }
  std::vector<double> sums(static_cast<std::size_t>(K), 0.0);
  for (Index i = 0; i < n; ++i) sums[static_cast<std::size_t>(groups[static_cast<std::size_t>(i)])] += raw(i);
  DegreeParams p;
  p.psi = Vector(n);
  for (Index i = 0; i < n; ++i) p.psi(i) = raw(i) / sums[static_cast<std::size_t>(groups[static_cast<std::size_t>(i)])];
  p.block_map = groups;
  p.scale = scale;
  return p;
}

/// Edge probabilities for one period, clipped to [0,1]; `clipped` counts clips.
inline Matrix edge_probabilities(const Labels& z, const Matrix& b, const Vector& theta, long* clipped = nullptr) {
  const Index n = static_cast<Index>(z.size());
  Matrix p = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      double v = theta(i) * theta(j) * b(z[static_cast<std::size_t>(i)], z[static_cast<std::size_t>(j)]);
      if (v > 1.0) {
        v = 1.0;
        if (clipped) ++*clipped;
      }
      p(i, j) = p(j, i) = v;
    }
  return p;
}

/// Draws one symmetric hollow Bernoulli adjacency from upper-triangular probabilities.
inline Matrix sample_adjacency(const Matrix& p, Engine& g) {
  const Index n = p.rows();
  Matrix a = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      if (uniform01(g) < p(i, j)) a(i, j) = a(j, i) = 1.0;
  return a;
}

inline CovariateMatrix sample_covariates(const SimConfig& cfg, const Labels& groups, Engine& g) {
  const int N = cfg.N;
  if (cfg.covariate_mode == CovariateMode::UniformNoise) {
    const int R = cfg.resolved_covariate_columns();
    Matrix x(N, R);
    for (int i = 0; i < N; ++i)
      for (int r = 0; r < R; ++r) x(i, r) = cfg.covariate_range * uniform01(g);
    return CovariateMatrix::continuous(std::move(x));
  }
  Matrix x = Matrix::Zero(N, cfg.K);
  for (int i = 0; i < N; ++i) {
    int cat = groups[static_cast<std::size_t>(i)];
    if (uniform01(g) < cfg.dummy_flip_probability) cat = static_cast<int>(uniform_index(g, static_cast<std::uint64_t>(cfg.K)));
    x(i, cat) = 1.0;
  }
  return CovariateMatrix(std::move(x), std::vector<ColumnKind>(static_cast<std::size_t>(cfg.K), ColumnKind::Dummy));
}

/// Samples adjacency, memberships with churn, degree weights and covariates.
/// Each component draws from its own named seed stream, so identical configs
/// give bit-identical instances.
inline SimulatedInstance sample_dynamic_dcbm(const SimConfig& cfg, const BlockProbabilitySeries& B) {
  cfg.validate();
  if (B.periods() != cfg.T || B.groups() != cfg.K)
    throw DimensionError("sample_dynamic_dcbm: block series is " + std::to_string(B.periods()) + "x" +
                         std::to_string(B.groups()) + ", config wants T=" + std::to_string(cfg.T) +
                         " K=" + std::to_string(cfg.K));
  const SeedStream root(cfg.seed);
  Engine membership_rng = root.child("membership").engine();
  Engine degree_rng = root.child("degree").engine();
  Engine covariate_rng = root.child("covariates").engine();

  std::vector<Labels> labels;
  labels.push_back(detail::balanced_labels(cfg.N, cfg.K, membership_rng));
  for (int t = 1; t < cfg.T; ++t) labels.push_back(detail::churn_step(labels.back(), cfg.K, cfg.churn, membership_rng));

  SimulatedInstance out;
  out.degrees = sample_degree_params(labels.front(), cfg.K, cfg.degree_mode, cfg.degree_scale, degree_rng);
  const Vector theta = out.degrees.theta();

  std::vector<Matrix> adjacency;
  adjacency.reserve(static_cast<std::size_t>(cfg.T));
  for (int t = 0; t < cfg.T; ++t) {
    Engine edge_rng = root.child("edges", static_cast<std::uint64_t>(t)).engine();
    const Matrix p = edge_probabilities(labels[static_cast<std::size_t>(t)], B.at(t), theta, &out.clipped);
    adjacency.push_back(sample_adjacency(p, edge_rng));
  }
  out.network = DynamicNetwork(std::move(adjacency));
  out.membership = MembershipSeries(std::move(labels), cfg.K);
  out.covariates = sample_covariates(cfg, out.membership.at(0), covariate_rng);
  return out;
}

/// Population similarity L + alpha * X (X' L X) X' built from the expected
/// adjacency Theta Z B Z' Theta (diagonal included). `tau` defaults to the
/// mean population degree.
inline Matrix population_similarity(const Labels& z, const Matrix& b, const Vector& theta, const Matrix& x, double alpha,
                                    std::optional<double> tau = std::nullopt) {
  const Index n = static_cast<Index>(z.size());
  if (theta.size() != n) throw DimensionError("population_similarity: theta length mismatch");
  if (x.rows() != n && x.cols() > 0) throw DimensionError("population_similarity: covariate rows mismatch");
  Matrix a(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = theta(i) * theta(j) * b(z[static_cast<std::size_t>(i)], z[static_cast<std::size_t>(j)]);
  const Vector deg = a.rowwise().sum();
  const double t = tau.value_or(n > 0 ? deg.mean() : 0.0);
  Vector dinv(n);
  for (Index i = 0; i < n; ++i) {
    const double d = deg(i) + t;
    if (!(d > 0.0)) throw NumericalError("population_similarity: degenerate node " + std::to_string(i) + " with zero population degree");
    dinv(i) = 1.0 / std::sqrt(d);
  }
  Matrix l = dinv.asDiagonal() * a * dinv.asDiagonal();
  if (x.cols() == 0 || alpha == 0.0) return l;
  const Matrix w = x.transpose() * l * x;
  return l + alpha * (x * w * x.transpose());
}

}  // namespace cascdc
