#include <gtest/gtest.h>

#include <cmath>

#include "cascdc/lasso.hpp"
#include "cascdc/netbuild.hpp"
#include "fixtures.hpp"

using namespace cascdc;

namespace {

Matrix path3() {
  Matrix a = Matrix::Zero(3, 3);
  a(0, 1) = a(1, 0) = a(1, 2) = a(2, 1) = 1.0;
  return a;
}

}  // namespace

TEST(Lasso, SoftThreshold) {
  EXPECT_EQ(lasso::soft_threshold(3.0, 1.0), 2.0);
  EXPECT_EQ(lasso::soft_threshold(-3.0, 1.0), -2.0);
  EXPECT_EQ(lasso::soft_threshold(0.5, 1.0), 0.0);
}

TEST(Lasso, ZeroLambdaBeatsEverySinglePredictor) {
  Engine g(4);
  const int n = 80, p = 5;
  Matrix x(n, p);
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) x(i, j) = standard_normal(g);
    y(i) = 0.7 * x(i, 0) - 0.4 * x(i, 3) + 0.3 * standard_normal(g);
  }
  lasso::Config cfg;
  cfg.lambda_grid = {0.0};
  const auto sel = lasso::fit(x, y, cfg);
  const double rss = (y - x * sel.coefficients).squaredNorm();
  for (int j = 0; j < p; ++j) {
    const double b = x.col(j).dot(y) / x.col(j).squaredNorm();
    EXPECT_LE(rss, (y - b * x.col(j)).squaredNorm() + 1e-9);
  }
}

TEST(AdaptiveLasso, DuplicateColumnSelectsTwin) {
  const ReturnPanel panel = fixture::duplicate_panel(10, 200, 1);
  const LassoFit f = adaptive_lasso_fit(panel, 0, {0, 200});
  EXPECT_EQ(f.selected, std::vector<int>{1});
  for (int j : f.selected) EXPECT_GT(std::abs(f.coefficients(j - 1)), 1e-10);
}

TEST(AdaptiveLasso, ZeroTargetIsDegenerate) {
  ReturnPanel panel = fixture::noise_panel(5, 80, 2);
  panel.returns.col(2).setZero();
  const LassoFit f = adaptive_lasso_fit(panel, 2, {0, 80});
  EXPECT_TRUE(f.degenerate);
  EXPECT_TRUE(f.selected.empty());
  EXPECT_EQ(f.intercept, 0.0);
}

TEST(AdaptiveLasso, WindowBounds) {
  const ReturnPanel panel = fixture::noise_panel(4, 100, 3);
  EXPECT_THROW(adaptive_lasso_fit(panel, 0, {0, 59}), RangeError);
  EXPECT_NO_THROW(adaptive_lasso_fit(panel, 0, {40, 100}));
  EXPECT_THROW(adaptive_lasso_fit(panel, 0, {50, 120}), RangeError);
  EXPECT_THROW(adaptive_lasso_fit(panel, 7, {0, 60}), ConfigError);
}

TEST(ReturnNetwork, CorrelatedPairAlwaysLinked) {
  ReturnPanel panel = fixture::noise_panel(8, 150, 9);
  Engine g(10);
  for (int t = 0; t < 150; ++t) panel.returns(t, 5) = panel.returns(t, 2) + 1e-4 * standard_normal(g);
  ReturnNetworkConfig cfg;
  cfg.step = 30;
  const auto rn = return_network(panel, cfg);
  ASSERT_EQ(rn.network.periods(), 4);
  for (int t = 0; t < rn.network.periods(); ++t) EXPECT_EQ(rn.network.at(t)(2, 5), 1.0);
  EXPECT_EQ(rn.period_end_dates.back(), panel.dates[149]);
}

TEST(ReturnNetwork, NoiseHasLowDegree) {
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ReturnNetworkConfig cfg;
    cfg.window = 200;
    const auto rn = return_network(fixture::noise_panel(10, 200, 100 + seed), cfg);
    total += rn.network.at(0).sum() / 10.0;
  }
  EXPECT_LT(total / 20.0, 1.0);
}

TEST(ReturnNetwork, ColumnOrderInvariant) {
  ReturnPanel panel = fixture::noise_panel(6, 90, 12);
  panel.returns.col(4) = 0.5 * panel.returns.col(1) + 0.5 * panel.returns.col(3);
  ReturnNetworkConfig cfg;
  cfg.step = 30;
  const auto base = return_network(panel, cfg);
  const std::vector<int> perm{5, 2, 0, 4, 1, 3};
  ReturnPanel moved = panel;
  for (int i = 0; i < 6; ++i) {
    moved.returns.col(i) = panel.returns.col(perm[static_cast<std::size_t>(i)]);
    moved.assets[static_cast<std::size_t>(i)] = panel.assets[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
  }
  const auto other = return_network(moved, cfg);
  for (int t = 0; t < base.network.periods(); ++t)
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j)
        EXPECT_EQ(other.network.at(t)(i, j), base.network.at(t)(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]));
}

TEST(ReturnNetwork, SymmetricHollowAndAndSubsetOfOr) {
  const ReturnPanel panel = fixture::noise_panel(7, 120, 21);
  ReturnNetworkConfig cfg;
  cfg.step = 20;
  const auto any = return_network(panel, cfg);
  cfg.symmetrization = Symmetrization::And;
  const auto both = return_network(panel, cfg);
  for (int t = 0; t < any.network.periods(); ++t) {
    EXPECT_TRUE((both.network.at(t).array() <= any.network.at(t).array()).all());
    EXPECT_EQ(any.network.at(t).diagonal().cwiseAbs().sum(), 0.0);
  }
  cfg.mode = WindowMode::Expanding;
  EXPECT_EQ(return_network(panel, cfg).network.periods(), any.network.periods());
}

TEST(ReturnNetwork, ShortPanelRejected) {
  EXPECT_THROW(return_network(fixture::noise_panel(4, 50, 1)), RangeError);
}

TEST(ContractAdjacency, Examples) {
  const ContractAttributes eth{{"ETH", "Ethash", {"PoW"}}, {"ETC", "Ethash", {"PoW"}}};
  EXPECT_EQ(contract_adjacency(eth)(0, 1), 1.0);
  const ContractAttributes distinct{{"a", "x", {"p"}}, {"b", "y", {"q"}}, {"c", "z", {"r"}}};
  EXPECT_EQ(contract_adjacency(distinct).sum(), 0.0);
  const ContractAttributes four{{"a", "x", {"p"}}, {"b", "y", {"p"}}, {"c", "z", {"q"}}, {"d", "z", {"r"}}};
  EXPECT_EQ(contract_adjacency(four).sum() / 2.0, 2.0);
  const ContractAttributes unknown{{"a", "Unknown", {"N/A"}}, {"b", "unknown", {"N/A"}}};
  EXPECT_EQ(contract_adjacency(unknown).sum(), 0.0);
  EXPECT_EQ(contract_adjacency(four, AttributeField::Algorithm).sum() / 2.0, 1.0);
  EXPECT_EQ(contract_adjacency(four, AttributeField::ProofType).sum() / 2.0, 1.0);
}

TEST(ContractAdjacency, MonotoneInSharedAttributes) {
  ContractAttributes attrs{{"a", "x", {"p"}}, {"b", "y", {"q"}}, {"c", "x", {"r"}}};
  const Matrix before = contract_adjacency(attrs);
  attrs[1].proof_types.push_back("r");
  const Matrix after = contract_adjacency(attrs);
  EXPECT_TRUE((after.array() >= before.array()).all());
  EXPECT_EQ(after(1, 2), 1.0);
}

TEST(Dummies, ColumnsAndUnknowns) {
  const ContractAttributes three{{"a", "x", {"p"}}, {"b", "y", {"p"}}, {"c", "x", {"p"}}};
  const auto x = covariate_dummies(three);
  EXPECT_EQ(x.cols(), 3);
  EXPECT_EQ(x.bound(), 1.0);
  EXPECT_EQ(x.names(), (std::vector<std::string>{"algorithm=x", "algorithm=y", "proof=p"}));
  const ContractAttributes unk{{"a", "unknown", {}}, {"b", "y", {"p"}}};
  EXPECT_EQ(covariate_dummies(unk).values().row(0).sum(), 0.0);
}

TEST(Dummies, DotProductMatchesSharedAlgorithm) {
  Engine g(8);
  const std::vector<std::string> algos{"a", "b", "c", "unknown"};
  for (int trial = 0; trial < 20; ++trial) {
    ContractAttributes attrs;
    for (int i = 0; i < 9; ++i) attrs.push_back({std::to_string(i), algos[uniform_index(g, 4)], {}});
    const auto x = covariate_dummies(attrs);
    const Matrix gram = x.values() * x.values().transpose();
    const Matrix a = contract_adjacency(attrs, AttributeField::Algorithm);
    for (int i = 0; i < 9; ++i)
      for (int j = 0; j < 9; ++j)
        if (i != j) EXPECT_EQ(gram(i, j) >= 1.0, a(i, j) == 1.0);
  }
}

TEST(Centrality, CompleteGraphUniform) {
  Matrix k4 = Matrix::Ones(4, 4);
  k4.diagonal().setZero();
  const auto c = eigenvector_centrality(k4);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(c.scores(i), 0.5, 1e-12);
  EXPECT_NEAR(c.lambda_max, 3.0, 1e-12);
}

TEST(Centrality, PathOfThree) {
  const auto c = eigenvector_centrality(path3());
  const double norm = 2.0;  // |(1, sqrt2, 1)|
  EXPECT_NEAR(c.scores(0), 1.0 / norm, 1e-12);
  EXPECT_NEAR(c.scores(1), std::sqrt(2.0) / norm, 1e-12);
  EXPECT_NEAR(c.scores(2), 1.0 / norm, 1e-12);
  EXPECT_NEAR(c.lambda_max, std::sqrt(2.0), 1e-12);
  EXPECT_LT((path3() * c.scores - c.lambda_max * c.scores).norm(), 1e-8);
}

TEST(Centrality, DisjointTrianglesAndEmpty) {
  Matrix a = Matrix::Zero(6, 6);
  for (int b : {0, 3})
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (i != j) a(b + i, b + j) = 1.0;
  const auto c = eigenvector_centrality(a);
  EXPECT_TRUE(c.disconnected);
  int support = 0;
  for (int i = 0; i < 6; ++i) support += c.scores(i) > 0.0;
  EXPECT_EQ(support, 3);
  const auto e = eigenvector_centrality(Matrix::Zero(3, 3));
  EXPECT_TRUE(e.empty);
  EXPECT_EQ(e.scores.sum(), 0.0);
}

TEST(DegreeCentrality, StarRegularAndEmpty) {
  Matrix s = Matrix::Zero(4, 4);
  for (int j = 1; j < 4; ++j) s(0, j) = s(j, 0) = 1.0;
  const auto c = degree_centrality_normalized(s);
  EXPECT_DOUBLE_EQ(c.scores(0), 0.5);
  for (int j = 1; j < 4; ++j) EXPECT_DOUBLE_EQ(c.scores(j), 1.0 / 6.0);
  Matrix cycle = Matrix::Zero(5, 5);
  for (int i = 0; i < 5; ++i) cycle(i, (i + 1) % 5) = cycle((i + 1) % 5, i) = 1.0;
  for (int i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(degree_centrality_normalized(cycle).scores(i), 0.2);
  const auto e = degree_centrality_normalized(Matrix::Zero(4, 4));
  EXPECT_TRUE(e.empty);
  EXPECT_DOUBLE_EQ(e.scores(2), 0.25);
}

// Five assets: a,b share Ethash; b,c share PoS; d,e share Scrypt and PoW;
// a also lists PoW. Edges: ab, bc, de, ad, ae. Degrees 3,2,1,2,2 over 10.
TEST(DegreeCentrality, ToyAttributeTable) {
  const ContractAttributes toy{{"a", "Ethash", {"PoW"}},
                               {"b", "Ethash", {"PoS"}},
                               {"c", "X11", {"PoS"}},
                               {"d", "Scrypt", {"PoW"}},
                               {"e", "Scrypt", {"PoW"}}};
  const auto c = degree_centrality_normalized(contract_adjacency(toy));
  const double expect[] = {0.3, 0.2, 0.1, 0.2, 0.2};
  for (int i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(c.scores(i), expect[i]);
  EXPECT_EQ(compensated_sum(c.scores), 1.0);
}
