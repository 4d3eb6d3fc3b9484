#pragma once

// Scoring clusterings, group-level network statistics, the uniform
// misclustering bound, and the daily contrarian backtest.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "cascdc/netbuild.hpp"
#include "cascdc/sbm.hpp"
#include "cascdc/types.hpp"

namespace cascdc {

// ---------------------------------------------------------------------------
// Misclustering

namespace detail {

/// Maximum-weight perfect matching on a square matrix (Hungarian algorithm,
/// O(n^3)). Returns assignment row -> column.
inline std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& w) {
  const int n = static_cast<int>(w.size());
  const double inf = std::numeric_limits<double>::infinity();
  // Minimize cost = -w with the classic potentials formulation (1-based).
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = -w[static_cast<std::size_t>(i0 - 1)][static_cast<std::size_t>(j - 1)] - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j)
    if (p[static_cast<std::size_t>(j)] > 0) row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return row_to_col;
}

/// Largest number of agreeing nodes over all bijections of label alphabets.
inline int best_agreement(const Labels& a, const Labels& b) {
  int k = 0;
  for (int x : a) k = std::max(k, x + 1);
  for (int x : b) k = std::max(k, x + 1);
  std::vector<std::vector<double>> conf(static_cast<std::size_t>(k), std::vector<double>(static_cast<std::size_t>(k), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i) conf[static_cast<std::size_t>(a[i])][static_cast<std::size_t>(b[i])] += 1.0;
  if (k <= 6) {
    std::vector<int> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    double best = 0.0;
    do {
      double s = 0.0;
      for (int r = 0; r < k; ++r) s += conf[static_cast<std::size_t>(r)][static_cast<std::size_t>(perm[static_cast<std::size_t>(r)])];
      best = std::max(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return static_cast<int>(std::lround(best));
  }
  const std::vector<int> match = max_weight_assignment(conf);
  double s = 0.0;
  for (int r = 0; r < k; ++r) s += conf[static_cast<std::size_t>(r)][static_cast<std::size_t>(match[static_cast<std::size_t>(r)])];
  return static_cast<int>(std::lround(s));
}

}  // namespace detail

struct MisclusteringRates {
  std::vector<double> per_period;
  double sup = 0.0;
  double mean = 0.0;
};

/// Fraction of nodes mislabeled under the best label bijection, per period.
inline double misclustering_rate(const Labels& estimate, const Labels& truth) {
  if (estimate.size() != truth.size()) throw DimensionError("misclustering_rate: label vectors differ in length");
  if (truth.empty()) return 0.0;
  for (int x : estimate)
    if (x < 0) throw ConfigError("misclustering_rate: negative label");
  for (int x : truth)
    if (x < 0) throw ConfigError("misclustering_rate: negative label");
  const int agree = detail::best_agreement(estimate, truth);
  return 1.0 - static_cast<double>(agree) / static_cast<double>(truth.size());
}

inline MisclusteringRates misclustering_rate(const MembershipSeries& estimate, const MembershipSeries& truth) {
  if (estimate.periods() != truth.periods() || estimate.nodes() != truth.nodes())
    throw DimensionError("misclustering_rate: shape mismatch (" + std::to_string(estimate.periods()) + "x" +
                         std::to_string(estimate.nodes()) + " vs " + std::to_string(truth.periods()) + "x" +
                         std::to_string(truth.nodes()) + ")");
  MisclusteringRates out;
  for (int t = 0; t < truth.periods(); ++t) out.per_period.push_back(misclustering_rate(estimate.at(t), truth.at(t)));
  if (!out.per_period.empty()) {
    out.sup = *std::max_element(out.per_period.begin(), out.per_period.end());
    out.mean = std::accumulate(out.per_period.begin(), out.per_period.end(), 0.0) / static_cast<double>(out.per_period.size());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Significance helpers

enum class SignificanceTest { PairedT, NeweyWest };

struct TTest {
  double mean = 0.0;
  double tstat = std::numeric_limits<double>::quiet_NaN();
  double pvalue = std::numeric_limits<double>::quiet_NaN();
  int n = 0;
};

/// Two-sided one-sample t-test of mean zero; NeweyWest uses a Bartlett
/// long-run variance with `lag` autocovariances.
inline TTest mean_test(const std::vector<double>& x, SignificanceTest kind = SignificanceTest::PairedT, int lag = 5) {
  TTest out;
  out.n = static_cast<int>(x.size());
  if (x.empty()) return out;
  const double n = static_cast<double>(x.size());
  out.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  if (x.size() < 2) return out;
  double var = 0.0;
  if (kind == SignificanceTest::PairedT) {
    for (double v : x) var += (v - out.mean) * (v - out.mean);
    var /= n - 1.0;
  } else {
    auto gamma = [&](std::size_t h) {
      double g = 0.0;
      for (std::size_t i = h; i < x.size(); ++i) g += (x[i] - out.mean) * (x[i - h] - out.mean);
      return g / n;
    };
    var = gamma(0);
    const int L = std::min<int>(lag, static_cast<int>(x.size()) - 1);
    for (int h = 1; h <= L; ++h) var += 2.0 * (1.0 - h / (L + 1.0)) * gamma(static_cast<std::size_t>(h));
    var = std::max(var, 0.0);
  }
  const double se = std::sqrt(var / n);
  if (se == 0.0) {
    out.tstat = out.mean == 0.0 ? std::numeric_limits<double>::quiet_NaN()
                                : std::copysign(std::numeric_limits<double>::infinity(), out.mean);
    out.pvalue = out.mean == 0.0 ? 1.0 : 0.0;
    return out;
  }
  out.tstat = out.mean / se;
  boost::math::students_t dist(n - 1.0);
  out.pvalue = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(out.tstat)));
  return out;
}

// ---------------------------------------------------------------------------
// Group connections

struct GroupConnection {
  int group = 0;  ///< -1 for the all-groups row
  double within = 0.0;
  double cross = 0.0;
  double diff = 0.0;
  TTest test;
  bool cross_undefined = false;  ///< some period had no outside nodes
};

/// Per period and group i: within = W_i / (4 N_i), cross = C_i / (4 (N - N_i)),
/// where W_i = 2 * sum_{u,v in G_i} A(u,v) and C_i = 2 * sum_{u in G_i, v not in G_i} A(u,v)
/// are endpoint counts over ordered pairs. Values are averaged over periods and
/// the per-period differences are tested against zero. The last row (group -1)
/// averages the group rows.
inline std::vector<GroupConnection> group_connections(const DynamicNetwork& net, const MembershipSeries& z,
                                                      SignificanceTest test = SignificanceTest::PairedT) {
  if (net.periods() != z.periods() || net.nodes() != z.nodes())
    throw DimensionError("group_connections: network and membership shapes differ");
  const int K = z.groups();
  const int T = net.periods();
  const int N = net.nodes();
  std::vector<std::vector<double>> within(static_cast<std::size_t>(K)), cross(static_cast<std::size_t>(K)), diff(static_cast<std::size_t>(K));
  std::vector<char> undefined(static_cast<std::size_t>(K), 0);
  std::vector<double> all_diff;
  std::vector<double> all_within, all_cross;
  for (int t = 0; t < T; ++t) {
    const Matrix& a = net.at(t);
    const Labels& l = z.at(t);
    std::vector<double> w_end(static_cast<std::size_t>(K), 0.0), c_end(static_cast<std::size_t>(K), 0.0);
    for (int u = 0; u < N; ++u)
      for (int v = 0; v < N; ++v) {
        if (a(u, v) == 0.0) continue;
        const int gu = l[static_cast<std::size_t>(u)], gv = l[static_cast<std::size_t>(v)];
        if (gu == gv)
          w_end[static_cast<std::size_t>(gu)] += 2.0 * a(u, v);
        else
          c_end[static_cast<std::size_t>(gu)] += 2.0 * a(u, v);
      }
    const std::vector<int> sizes = z.group_sizes(t);
    double sum_w = 0.0, sum_c = 0.0, sum_d = 0.0;
    int counted = 0;
    for (int g = 0; g < K; ++g) {
      const int ni = sizes[static_cast<std::size_t>(g)];
      if (ni == 0) throw ConfigError("group_connections: group " + std::to_string(g) + " is empty in period " + std::to_string(t));
      const double wv = w_end[static_cast<std::size_t>(g)] / (4.0 * ni);
      double cv = std::numeric_limits<double>::quiet_NaN();
      if (N - ni > 0)
        cv = c_end[static_cast<std::size_t>(g)] / (4.0 * (N - ni));
      else
        undefined[static_cast<std::size_t>(g)] = 1;
      within[static_cast<std::size_t>(g)].push_back(wv);
      cross[static_cast<std::size_t>(g)].push_back(cv);
      diff[static_cast<std::size_t>(g)].push_back(wv - cv);
      if (!std::isnan(cv)) {
        sum_w += wv;
        sum_c += cv;
        sum_d += wv - cv;
        ++counted;
      }
    }
    if (counted > 0) {
      all_within.push_back(sum_w / counted);
      all_cross.push_back(sum_c / counted);
      all_diff.push_back(sum_d / counted);
    }
  }
  auto mean = [](const std::vector<double>& v) {
    return v.empty() ? std::numeric_limits<double>::quiet_NaN() : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  std::vector<GroupConnection> out;
  for (int g = 0; g < K; ++g) {
    GroupConnection gc;
    gc.group = g;
    gc.within = mean(within[static_cast<std::size_t>(g)]);
    gc.cross = mean(cross[static_cast<std::size_t>(g)]);
    gc.diff = mean(diff[static_cast<std::size_t>(g)]);
    gc.cross_undefined = undefined[static_cast<std::size_t>(g)] != 0;
    if (!gc.cross_undefined) gc.test = mean_test(diff[static_cast<std::size_t>(g)], test);
    out.push_back(gc);
  }
  GroupConnection all;
  all.group = -1;
  all.within = mean(all_within);
  all.cross = mean(all_cross);
  all.diff = mean(all_diff);
  all.test = mean_test(all_diff, test);
  out.push_back(all);
  return out;
}

/// Mean normalized degree centrality of each group's members.
inline std::vector<double> group_centrality(const Matrix& adjacency, const Labels& labels, int K = -1) {
  require_square(adjacency, "group_centrality");
  if (static_cast<Index>(labels.size()) != adjacency.rows()) throw DimensionError("group_centrality: label count mismatch");
  if (K < 0)
    for (int l : labels) K = std::max(K, l + 1);
  const Centrality c = degree_centrality_normalized(adjacency);
  std::vector<double> sum(static_cast<std::size_t>(K), 0.0);
  std::vector<int> count(static_cast<std::size_t>(K), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    sum[static_cast<std::size_t>(labels[i])] += c.scores(static_cast<Index>(i));
    ++count[static_cast<std::size_t>(labels[i])];
  }
  std::vector<double> out(static_cast<std::size_t>(K));
  for (int g = 0; g < K; ++g) {
    if (count[static_cast<std::size_t>(g)] == 0) throw ConfigError("group_centrality: group " + std::to_string(g) + " is empty");
    out[static_cast<std::size_t>(g)] = sum[static_cast<std::size_t>(g)] / count[static_cast<std::size_t>(g)];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Uniform misclustering bound

struct BoundParams {
  double N = 0, T = 0, K = 0;
  double r = 0;            ///< bandwidth (0 allowed)
  double s = 0;            ///< churn bound (0 allowed)
  double P_max = 0;        ///< largest block size over horizons
  double delta_min = 0;    ///< minimum regularized population degree
  double lambda_K_max = 0; ///< max_t of the K-th largest |eigenvalue|
  double m_z = 0;          ///< caller supplied; defaults to the min block proportion
  double W_max = 0;
  double c_w = 0;
  double eps = 0;          ///< k-means approximation parameter
  double L = 0;            ///< Hoelder constant
  double beta = 0;         ///< Hoelder exponent
  int l = 0;               ///< kernel order
  double confidence = 0;   ///< probability slack in (0,1)

  void validate() const {
    const double all[] = {N, T, K, r, s, P_max, delta_min, lambda_K_max, m_z, W_max, c_w, eps, L, beta, confidence};
    for (double v : all)
      if (!std::isfinite(v)) throw ConfigError("theorem1_bound: non-finite parameter");
    if (N <= 0 || T <= 0 || K <= 0 || P_max <= 0 || delta_min <= 0 || lambda_K_max <= 0 || m_z <= 0 || W_max <= 0 || beta <= 0)
      throw ConfigError("theorem1_bound: parameters must be positive");
    if (r < 0 || s < 0 || c_w < 0 || eps < 0 || L < 0 || l < 0) throw ConfigError("theorem1_bound: negative parameter");
    if (!(confidence > 0.0 && confidence < 1.0)) throw ConfigError("theorem1_bound: confidence must lie in (0,1)");
  }
};

struct BoundValue {
  double value = 0.0;
  bool vacuous = false;  ///< value >= 1
};

/// c(eps) K W_max^2 / (m_z^2 N lambda^2) *
///   { (4 + 2 c_w) b / sqrt(delta) + (2K/b)(sqrt(2 P_max r s) + 2 P_max) + N L / (b^2 l!) (r/T)^beta }^2
/// with b = sqrt(3 log(8 N T / confidence)) and c(eps) = 2^9 (2 + eps)^2.
inline BoundValue theorem1_bound(const BoundParams& p) {
  p.validate();
  const double b = std::sqrt(3.0 * std::log(8.0 * p.N * p.T / p.confidence));
  const double c_eps = 512.0 * (2.0 + p.eps) * (2.0 + p.eps);
  const double l_fact = std::tgamma(static_cast<double>(p.l) + 1.0);
  const double term1 = (4.0 + 2.0 * p.c_w) * b / std::sqrt(p.delta_min);
  const double term2 = (2.0 * p.K / b) * (std::sqrt(2.0 * p.P_max * p.r * p.s) + 2.0 * p.P_max);
  const double term3 = p.N * p.L / (b * b * l_fact) * std::pow(p.r / p.T, p.beta);
  const double brace = term1 + term2 + term3;
  const double prefactor = c_eps * p.K * p.W_max * p.W_max / (p.m_z * p.m_z * p.N * p.lambda_K_max * p.lambda_K_max);
  BoundValue out;
  out.value = prefactor * brace * brace;
  if (!std::isfinite(out.value)) throw NumericalError("theorem1_bound: non-finite result");
  out.vacuous = out.value >= 1.0;
  return out;
}

// ---------------------------------------------------------------------------
// Contrarian backtest

enum class LegMode {
  Quantile,   ///< bottom/top q fraction
  SingleAsset ///< one loser long, one winner short
};

struct BacktestConfig {
  double quantile = 0.2;
  LegMode mode = LegMode::Quantile;
  Index first_day = 1;  ///< first trading row (needs the previous row)
  Index last_day = -1;  ///< inclusive; -1 means the last row
};

struct BacktestResult {
  int group = -1;  ///< -1 for all assets
  std::vector<std::string> dates;
  std::vector<double> daily;
  std::vector<double> cumulative;
  std::vector<double> long_weight;   ///< sum of long weights per day
  std::vector<double> short_weight;  ///< sum of |short weights| per day
  bool widened = false;              ///< group too small for the quantile
};

/// Each day, inside the group, rank assets on the previous day's return; go
/// long the bottom fraction and short the top fraction with equal weights
/// (each leg sums to one). The reported daily return is the average of the
/// two legs' returns, (mean(long) - mean(short)) / 2, i.e. per unit of gross
/// exposure. Assets without a return on either day are skipped that day;
/// ties in the ranking break by asset id.
inline BacktestResult contrarian_backtest(const ReturnPanel& panel, const Labels& labels, int group, const BacktestConfig& cfg = {}) {
  if (static_cast<int>(labels.size()) != panel.size()) throw DimensionError("contrarian_backtest: one label per asset required");
  if (!(cfg.quantile > 0.0 && cfg.quantile <= 0.5)) throw ConfigError("contrarian_backtest: quantile must lie in (0, 0.5]");
  std::vector<int> members;
  for (int i = 0; i < panel.size(); ++i)
    if (group < 0 || labels[static_cast<std::size_t>(i)] == group) members.push_back(i);
  if (members.empty()) throw ConfigError("contrarian_backtest: group " + std::to_string(group) + " has no assets");
  const Index last = cfg.last_day < 0 ? panel.days() - 1 : cfg.last_day;
  if (cfg.first_day < 1 || last >= panel.days() || cfg.first_day > last)
    throw RangeError("contrarian_backtest: trading range outside the panel");
  BacktestResult out;
  out.group = group;
  out.widened = static_cast<double>(members.size()) < 2.0 / cfg.quantile;
  double wealth = 1.0;
  for (Index d = cfg.first_day; d <= last; ++d) {
    std::vector<int> live;
    for (int i : members)
      if (!std::isnan(panel.returns(d - 1, i)) && !std::isnan(panel.returns(d, i))) live.push_back(i);
    double ret = 0.0, lw = 0.0, sw = 0.0;
    if (live.size() >= 2) {
      std::sort(live.begin(), live.end(), [&](int a, int b) {
        const double ra = panel.returns(d - 1, a), rb = panel.returns(d - 1, b);
        if (ra != rb) return ra < rb;
        return panel.assets[static_cast<std::size_t>(a)] < panel.assets[static_cast<std::size_t>(b)];
      });
      const std::size_t n = live.size();
      std::size_t m = 1;
      if (cfg.mode == LegMode::Quantile)
        m = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(cfg.quantile * static_cast<double>(n) + 1e-9)));
      m = std::min(m, n / 2);
      double long_ret = 0.0, short_ret = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        long_ret += panel.returns(d, live[k]);
        short_ret += panel.returns(d, live[n - 1 - k]);
      }
      long_ret /= static_cast<double>(m);
      short_ret /= static_cast<double>(m);
      ret = 0.5 * (long_ret - short_ret);
      lw = sw = 1.0;
    }
    wealth *= 1.0 + ret;
    out.dates.push_back(panel.dates[static_cast<std::size_t>(d)]);
    out.daily.push_back(ret);
    out.cumulative.push_back(wealth - 1.0);
    out.long_weight.push_back(lw);
    out.short_weight.push_back(sw);
  }
  return out;
}

struct SpreadStat {
  int group_a = 0;
  int group_b = 0;
  TTest test;  ///< on daily return differences a - b
};

/// Pairwise tests on daily strategy-return differences. Series must share dates.
inline std::vector<SpreadStat> spread_statistics(const std::vector<BacktestResult>& results,
                                                 SignificanceTest kind = SignificanceTest::PairedT) {
  std::vector<SpreadStat> out;
  for (std::size_t a = 0; a < results.size(); ++a)
    for (std::size_t b = a + 1; b < results.size(); ++b) {
      if (results[a].daily.size() != results[b].daily.size()) throw DimensionError("spread_statistics: series lengths differ");
      std::vector<double> d(results[a].daily.size());
      for (std::size_t k = 0; k < d.size(); ++k) d[k] = results[a].daily[k] - results[b].daily[k];
      out.push_back({results[a].group, results[b].group, mean_test(d, kind)});
    }
  return out;
}

}  // namespace cascdc
