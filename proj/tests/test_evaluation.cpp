#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cascdc/evaluation.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace cascdc;

namespace {

Labels permuted(const Labels& z, const std::vector<int>& perm) {
  Labels out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = perm[static_cast<std::size_t>(z[i])];
  return out;
}

BoundParams pinned() {
  BoundParams p;
  p.N = 100;
  p.T = 10;
  p.K = 3;
  p.r = 2;
  p.s = 10;
  p.P_max = 40;
  p.delta_min = 50;
  p.lambda_K_max = 0.3;
  p.m_z = 0.2;
  p.W_max = 2;
  p.c_w = 1;
  p.eps = 0.01;
  p.L = 1;
  p.beta = 1;
  p.l = 4;
  p.confidence = 0.05;
  return p;
}

double oracle_bound(const BoundParams& p) {
  return static_cast<double>(oracle::bound(p.N, p.T, p.K, p.r, p.s, p.P_max, p.delta_min, p.lambda_K_max, p.m_z, p.W_max, p.c_w,
                                           p.eps, p.L, p.beta, p.l, p.confidence));
}

}  // namespace

TEST(Misclustering, Examples) {
  EXPECT_EQ(misclustering_rate(Labels{0, 0, 1, 1}, Labels{0, 0, 0, 0}), 0.5);
  EXPECT_EQ(misclustering_rate(Labels{0, 1, 2, 0}, Labels{0, 1, 2, 0}), 0.0);
  EXPECT_EQ(misclustering_rate(Labels{2, 0, 1, 2}, Labels{0, 1, 2, 0}), 0.0);
  EXPECT_THROW(misclustering_rate(Labels{0, 1}, Labels{0}), DimensionError);
  const MembershipSeries a({{0, 0, 1, 1}, {0, 1, 0, 1}}, 2), b({{1, 1, 0, 0}, {0, 0, 1, 1}}, 2);
  const auto r = misclustering_rate(a, b);
  EXPECT_EQ(r.per_period, (std::vector<double>{0.0, 0.5}));
  EXPECT_EQ(r.sup, 0.5);
  EXPECT_EQ(r.mean, 0.25);
  EXPECT_THROW(misclustering_rate(a, MembershipSeries({{0, 0, 1, 1}}, 2)), DimensionError);
}

TEST(Misclustering, AllPermutationsGiveZero) {
  Engine g(3);
  for (int K = 1; K <= 5; ++K) {
    Labels z(30);
    for (int i = 0; i < 30; ++i) z[static_cast<std::size_t>(i)] = i % K;
    std::shuffle(z.begin(), z.end(), g);
    std::vector<int> perm(static_cast<std::size_t>(K));
    std::iota(perm.begin(), perm.end(), 0);
    do EXPECT_EQ(misclustering_rate(permuted(z, perm), z), 0.0);
    while (std::next_permutation(perm.begin(), perm.end()));
  }
}

TEST(Misclustering, MatchesEnumerationOracle) {
  Engine g(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int K = 2 + trial % 7, n = 25;
    Labels a(n), b(n);
    for (int i = 0; i < n; ++i) {
      a[static_cast<std::size_t>(i)] = static_cast<int>(uniform_index(g, static_cast<std::uint64_t>(K)));
      b[static_cast<std::size_t>(i)] = static_cast<int>(uniform_index(g, static_cast<std::uint64_t>(K)));
    }
    EXPECT_NEAR(misclustering_rate(a, b), oracle::misclustering(a, b, K), 1e-15) << "K=" << K;
  }
}

TEST(Misclustering, PseudoMetric) {
  Engine g(6);
  for (int trial = 0; trial < 50; ++trial) {
    Labels a(20), b(20);
    for (int i = 0; i < 20; ++i) {
      a[static_cast<std::size_t>(i)] = static_cast<int>(uniform_index(g, 4));
      b[static_cast<std::size_t>(i)] = static_cast<int>(uniform_index(g, 4));
    }
    const double ab = misclustering_rate(a, b);
    EXPECT_EQ(ab, misclustering_rate(b, a));
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
    EXPECT_EQ(misclustering_rate(a, a), 0.0);
  }
}

TEST(Hungarian, AgreesWithEnumerationAboveSix) {
  Engine g(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int K = 7 + trial % 2;
    Labels a(40), b(40);
    for (int i = 0; i < 40; ++i) {
      a[static_cast<std::size_t>(i)] = static_cast<int>(uniform_index(g, static_cast<std::uint64_t>(K)));
      b[static_cast<std::size_t>(i)] = i % 3 == 0 ? a[static_cast<std::size_t>(i)] : static_cast<int>(uniform_index(g, static_cast<std::uint64_t>(K)));
    }
    EXPECT_NEAR(misclustering_rate(a, b), oracle::misclustering(a, b, K), 1e-15);
  }
}

// K4, groups {0,1} and {2,3}: each group has 1 internal edge (2 endpoints,
// doubled as ordered pairs gives 4 over 4*2) and 4 outgoing edges (8 over 4*2).
TEST(Connections, CompleteGraphHandCount) {
  Matrix k4 = Matrix::Ones(4, 4);
  k4.diagonal().setZero();
  const DynamicNetwork net({k4, k4});
  const auto rows = group_connections(net, MembershipSeries::constant({0, 0, 1, 1}, 2, 2));
  ASSERT_EQ(rows.size(), 3u);
  for (int g = 0; g < 2; ++g) {
    EXPECT_NEAR(rows[static_cast<std::size_t>(g)].within, 0.5, 1e-12);
    EXPECT_NEAR(rows[static_cast<std::size_t>(g)].cross, 1.0, 1e-12);
    EXPECT_NEAR(rows[static_cast<std::size_t>(g)].diff, -0.5, 1e-12);
  }
  EXPECT_EQ(rows[2].group, -1);
}

TEST(Connections, DisjointCliques) {
  Matrix a = Matrix::Zero(6, 6);
  for (int b : {0, 3})
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (i != j) a(b + i, b + j) = 1.0;
  const auto rows = group_connections(DynamicNetwork({a, a, a}), MembershipSeries::constant({0, 0, 0, 1, 1, 1}, 2, 3));
  for (int g = 0; g < 2; ++g) {
    EXPECT_EQ(rows[static_cast<std::size_t>(g)].cross, 0.0);
    EXPECT_GT(rows[static_cast<std::size_t>(g)].within, 0.0);
    EXPECT_GT(rows[static_cast<std::size_t>(g)].diff, 0.0);
    // 3 internal edges, 12 ordered-pair endpoints, over 4 * 3.
    EXPECT_NEAR(rows[static_cast<std::size_t>(g)].within, 1.0, 1e-12);
  }
}

TEST(Connections, SingletonGroupFlagsUndefinedCross) {
  Matrix a = Matrix::Zero(3, 3);
  a(0, 1) = a(1, 0) = 1.0;
  const auto rows = group_connections(DynamicNetwork({a}), MembershipSeries::constant({0, 0, 0}, 1, 1));
  EXPECT_TRUE(rows[0].cross_undefined);
  EXPECT_THROW(group_connections(DynamicNetwork({a}), MembershipSeries::constant({0, 0, 0}, 2, 1)), ConfigError);
}

TEST(GroupCentrality, StarAndUniform) {
  Matrix s = Matrix::Zero(4, 4);
  for (int j = 1; j < 4; ++j) s(0, j) = s(j, 0) = 1.0;
  const auto g = group_centrality(s, {0, 1, 1, 1});
  EXPECT_DOUBLE_EQ(g[0], 0.5);
  EXPECT_DOUBLE_EQ(g[1], 1.0 / 6.0);
  Matrix c = Matrix::Zero(6, 6);
  for (int i = 0; i < 6; ++i) c(i, (i + 1) % 6) = c((i + 1) % 6, i) = 1.0;
  for (double v : group_centrality(c, {0, 1, 2, 0, 1, 2})) EXPECT_DOUBLE_EQ(v, 1.0 / 6.0);
}

TEST(MeanTest, KnownValues) {
  const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  const TTest t = mean_test(x);
  EXPECT_DOUBLE_EQ(t.mean, 2.5);
  EXPECT_NEAR(t.tstat, 2.5 / std::sqrt((5.0 / 3.0) / 4.0), 1e-12);
  // Two-sided p for t = 3.873 with 3 degrees of freedom.
  EXPECT_NEAR(t.pvalue, 0.030466, 1e-5);
  EXPECT_TRUE(std::isfinite(mean_test(x, SignificanceTest::NeweyWest).tstat));
}

TEST(Bound, PinnedMatchesOracle) {
  const auto v = theorem1_bound(pinned());
  EXPECT_NEAR(v.value / oracle_bound(pinned()), 1.0, 1e-12);
  EXPECT_GE(v.value, 0.0);
  EXPECT_TRUE(v.vacuous);
}

TEST(Bound, ZeroBandwidthIgnoresChurn) {
  BoundParams p = pinned();
  p.r = 0;
  const double base = theorem1_bound(p).value;
  for (double s : {0.0, 1.0, 50.0, 1e4}) {
    p.s = s;
    EXPECT_EQ(theorem1_bound(p).value, base);
  }
}

TEST(Bound, MonotoneInLAndS) {
  BoundParams p = pinned();
  double prev = 0.0;
  for (double L = 0.0; L <= 10.0; L += 0.5) {
    p.L = L;
    const double v = theorem1_bound(p).value;
    EXPECT_GE(v, prev);
    prev = v;
  }
  p = pinned();
  prev = 0.0;
  for (double s = 0.0; s <= 100.0; s += 5.0) {
    p.s = s;
    const double v = theorem1_bound(p).value;
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(Bound, RejectsInvalid) {
  BoundParams p = pinned();
  p.confidence = 1.0;
  EXPECT_THROW(theorem1_bound(p), ConfigError);
  p = pinned();
  p.N = std::nan("");
  EXPECT_THROW(theorem1_bound(p), ConfigError);
}

TEST(Backtest, AlternatingEarnsOnePercent) {
  const ReturnPanel panel = fixture::alternating_panel(5);
  const auto r = contrarian_backtest(panel, {0, 0}, -1);
  ASSERT_EQ(r.daily.size(), 4u);
  for (double d : r.daily) EXPECT_EQ(d, 0.01);
  double w = 1.0;
  for (std::size_t k = 0; k < r.daily.size(); ++k) {
    w *= 1.0 + r.daily[k];
    EXPECT_NEAR(r.cumulative[k], w - 1.0, 1e-12);
  }
  EXPECT_TRUE(r.widened);
}

TEST(Backtest, CashNeutralAndPermutationInvariant) {
  const ReturnPanel panel = fixture::noise_panel(12, 60, 4);
  Labels labels(12);
  for (int i = 0; i < 12; ++i) labels[static_cast<std::size_t>(i)] = i % 2;
  const auto base = contrarian_backtest(panel, labels, 0);
  for (std::size_t k = 0; k < base.daily.size(); ++k) {
    EXPECT_EQ(base.long_weight[k], 1.0);
    EXPECT_EQ(base.short_weight[k], 1.0);
  }
  const std::vector<int> perm{11, 3, 7, 0, 5, 9, 1, 10, 2, 6, 4, 8};
  ReturnPanel moved = panel;
  Labels ml(12);
  for (int i = 0; i < 12; ++i) {
    const auto src = static_cast<std::size_t>(perm[static_cast<std::size_t>(i)]);
    moved.returns.col(i) = panel.returns.col(static_cast<Index>(src));
    moved.assets[static_cast<std::size_t>(i)] = panel.assets[src];
    ml[static_cast<std::size_t>(i)] = labels[src];
  }
  EXPECT_EQ(contrarian_backtest(moved, ml, 0).daily, base.daily);
  EXPECT_EQ(contrarian_backtest(moved, ml, -1).daily, contrarian_backtest(panel, labels, -1).daily);
}

TEST(Backtest, NullMeanWithinTwoStandardErrors) {
  std::vector<double> means;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto r = contrarian_backtest(fixture::noise_panel(20, 250, 7000 + seed), Labels(20, 0), -1);
    means.push_back(std::accumulate(r.daily.begin(), r.daily.end(), 0.0) / static_cast<double>(r.daily.size()));
  }
  const TTest t = mean_test(means);
  EXPECT_LT(std::abs(t.tstat), 2.0);
}

TEST(Backtest, RangeErrors) {
  const ReturnPanel panel = fixture::alternating_panel(5);
  BacktestConfig cfg;
  cfg.first_day = 0;
  EXPECT_THROW(contrarian_backtest(panel, {0, 0}, -1, cfg), RangeError);
  EXPECT_THROW(contrarian_backtest(panel, {0, 0}, 3), ConfigError);
  cfg = {};
  cfg.quantile = 0.7;
  EXPECT_THROW(contrarian_backtest(panel, {0, 0}, -1, cfg), ConfigError);
}

TEST(Backtest, MissingPriorReturnExcluded) {
  ReturnPanel panel = fixture::alternating_panel(5);
  panel.returns.conservativeResize(5, 3);
  panel.assets.push_back("C");
  panel.returns.col(2).setConstant(0.5);
  panel.returns(1, 2) = std::nan("");
  BacktestConfig cfg;
  cfg.quantile = 0.34;
  const auto r = contrarian_backtest(panel, {0, 0, 0}, -1, cfg);
  // Day 1 and 2 have C missing on one side, so only A and B trade.
  EXPECT_EQ(r.daily[0], 0.01);
  EXPECT_EQ(r.daily[1], 0.01);
}
