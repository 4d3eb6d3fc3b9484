#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "cascdc/linalg.hpp"
#include "cascdc/sbm.hpp"

using namespace cascdc;

namespace {

Matrix reference_block() {
  Matrix b(3, 3);
  b << 0.9, 0.6, 0.3, 0.6, 0.3, 0.4, 0.3, 0.4, 0.8;
  return b;
}

bool symmetric_hollow_binary(const Matrix& a) {
  for (Index i = 0; i < a.rows(); ++i) {
    if (a(i, i) != 0.0) return false;
    for (Index j = 0; j < a.cols(); ++j)
      if (a(i, j) != a(j, i) || (a(i, j) != 0.0 && a(i, j) != 1.0)) return false;
  }
  return true;
}

}  // namespace

TEST(BlockSeries, ReferenceRampScalesLinearly) {
  const auto B = BlockProbabilitySeries::reference_ramp(10);
  ASSERT_EQ(B.periods(), 10);
  ASSERT_EQ(B.groups(), 3);
  for (int t = 0; t < 10; ++t) EXPECT_LT((B.at(t) - (t + 1) / 10.0 * reference_block()).cwiseAbs().maxCoeff(), 1e-15);
  ASSERT_TRUE(B.generator().has_value());
  EXPECT_DOUBLE_EQ((*B.generator())(0.5, 0, 1), 0.3);
}

TEST(BlockSeries, RejectsInvalidSlices) {
  Matrix asym(2, 2);
  asym << 0.5, 0.1, 0.2, 0.5;
  EXPECT_THROW(BlockProbabilitySeries::constant(asym, 3), ConfigError);
  Matrix big(2, 2);
  big << 1.2, 0.1, 0.1, 0.5;
  EXPECT_THROW(BlockProbabilitySeries::constant(big, 3), ConfigError);
  // Indefinite slice flagged assortative.
  EXPECT_THROW(BlockProbabilitySeries::constant(reference_block(), 2, true), ConfigError);
  Matrix pd(2, 2);
  pd << 0.8, 0.1, 0.1, 0.7;
  EXPECT_NO_THROW(BlockProbabilitySeries::constant(pd, 2, true));
}

TEST(Membership, OneHotAndSizes) {
  const MembershipSeries z({{0, 1, 1, 2}, {0, 0, 1, 2}}, 3);
  const Matrix oh = z.one_hot(1);
  for (Index i = 0; i < 4; ++i) EXPECT_EQ(oh.row(i).sum(), 1.0);
  EXPECT_EQ(z.group_sizes(0), (std::vector<int>{1, 2, 1}));
  EXPECT_EQ(z.max_churn(), 1);
  EXPECT_FALSE(z.has_empty_group());
  EXPECT_THROW(MembershipSeries({{0, 3}}, 3), ConfigError);
  EXPECT_THROW(MembershipSeries({{0, 1}, {0}}, 2), DimensionError);
}

TEST(Network, ValidatesSlices) {
  Matrix a = Matrix::Zero(3, 3);
  a(0, 1) = 1.0;
  EXPECT_THROW(DynamicNetwork({a}), ConfigError);
  a(1, 0) = 1.0;
  EXPECT_NO_THROW(DynamicNetwork({a}));
  Matrix loop = a;
  loop(2, 2) = 1.0;
  EXPECT_THROW(DynamicNetwork({loop}), ConfigError);
  Matrix weighted = a * 0.5;
  EXPECT_THROW(DynamicNetwork({weighted}), ConfigError);
  EXPECT_THROW(DynamicNetwork({a}, {"x", "y"}), DimensionError);
}

TEST(Covariates, DummyColumnsAreBinary) {
  Matrix x(2, 1);
  x << 1.0, 0.5;
  EXPECT_THROW(CovariateMatrix(x, {ColumnKind::Dummy}), ConfigError);
  const auto c = CovariateMatrix::continuous(x);
  EXPECT_DOUBLE_EQ(c.bound(), 1.0);
  EXPECT_TRUE(CovariateMatrix::none(4).empty());
}

TEST(Simulator, ImpossibleConfiguration) {
  SimConfig cfg;
  cfg.N = 2;
  cfg.K = 3;
  cfg.T = 4;
  EXPECT_THROW(sample_dynamic_dcbm(cfg, BlockProbabilitySeries::reference_ramp(4)), ConfigError);
  cfg.N = 10;
  EXPECT_THROW(sample_dynamic_dcbm(cfg, BlockProbabilitySeries::reference_ramp(5)), DimensionError);
}

TEST(Simulator, ZeroBlockGivesEmptyGraphs) {
  SimConfig cfg;
  cfg.N = 20;
  cfg.T = 5;
  cfg.K = 3;
  cfg.churn = 2;
  const auto inst = sample_dynamic_dcbm(cfg, BlockProbabilitySeries::constant(Matrix::Zero(3, 3), 5));
  for (const Matrix& a : inst.network.slices()) EXPECT_EQ(a.sum(), 0.0);
}

TEST(Simulator, SlicesSymmetricHollowBinaryAndChurnBounded) {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    SimConfig cfg;
    cfg.N = 40;
    cfg.T = 8;
    cfg.K = 3;
    cfg.churn = static_cast<int>(seed % 7);
    cfg.degree_mode = seed % 2 ? DegreeMode::PowerLaw : DegreeMode::Uniform;
    cfg.seed = seed;
    const auto inst = sample_dynamic_dcbm(cfg, BlockProbabilitySeries::reference_ramp(8));
    for (const Matrix& a : inst.network.slices()) EXPECT_TRUE(symmetric_hollow_binary(a));
    EXPECT_LE(inst.membership.max_churn(), cfg.churn);
    EXPECT_FALSE(inst.membership.has_empty_group());
    EXPECT_NO_THROW(inst.degrees.validate(1e-12));
    EXPECT_EQ(inst.covariates.cols(), static_cast<int>(std::floor(std::log(40.0))));
    EXPECT_LE(inst.covariates.bound(), 10.0);
  }
}

TEST(Simulator, ChurnNeverEmptiesTinyGroups) {
  SimConfig cfg;
  cfg.N = 4;
  cfg.K = 3;
  cfg.T = 30;
  cfg.churn = 4;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    cfg.seed = seed;
    const auto inst = sample_dynamic_dcbm(cfg, BlockProbabilitySeries::reference_ramp(30));
    EXPECT_FALSE(inst.membership.has_empty_group());
    EXPECT_LE(inst.membership.max_churn(), 4);
  }
}

TEST(Simulator, Deterministic) {
  SimConfig cfg;
  cfg.N = 30;
  cfg.T = 5;
  cfg.churn = 3;
  cfg.degree_mode = DegreeMode::PowerLaw;
  cfg.seed = 99;
  const auto B = BlockProbabilitySeries::reference_ramp(5);
  const auto a = sample_dynamic_dcbm(cfg, B);
  const auto b = sample_dynamic_dcbm(cfg, B);
  for (int t = 0; t < 5; ++t) EXPECT_TRUE(a.network.at(t) == b.network.at(t));
  EXPECT_EQ(a.membership.all(), b.membership.all());
  EXPECT_TRUE(a.degrees.psi == b.degrees.psi);
  EXPECT_TRUE(a.covariates.values() == b.covariates.values());
  cfg.seed = 100;
  const auto c = sample_dynamic_dcbm(cfg, B);
  bool differs = false;
  for (int t = 0; t < 5; ++t) differs = differs || !(a.network.at(t) == c.network.at(t));
  EXPECT_TRUE(differs);
}

TEST(Simulator, UniformPsiReducesToPlainBlockmodel) {
  const Labels z{0, 0, 1, 1, 1};
  Engine g(1);
  const DegreeParams d = sample_degree_params(z, 2, DegreeMode::Uniform, DegreeScale::MeanOne, g);
  EXPECT_DOUBLE_EQ(d.psi(0), 0.5);
  EXPECT_DOUBLE_EQ(d.psi(2), 1.0 / 3.0);
  for (Index i = 0; i < 5; ++i) EXPECT_NEAR(d.theta()(i), 1.0, 1e-15);
}

// Within-group edge count under the sum-to-one parametrization against the
// closed-form Bernoulli mean and variance.
TEST(Simulator, WithinGroupEdgeCountMatchesBernoulliSum) {
  const int N = 20, K = 2;
  const double p = 1.0;
  SimConfig cfg;
  cfg.N = N;
  cfg.K = K;
  cfg.T = 1;
  cfg.degree_scale = DegreeScale::SumOne;
  double total = 0.0, mean = 0.0, var = 0.0;
  const int seeds = 100;
  for (int s = 0; s < seeds; ++s) {
    cfg.seed = static_cast<std::uint64_t>(1000 + s);
    const auto inst = sample_dynamic_dcbm(cfg, BlockProbabilitySeries::constant(p * Matrix::Identity(K, K), 1));
    const Labels& z = inst.membership.at(0);
    const Vector& psi = inst.degrees.psi;
    const Matrix& a = inst.network.at(0);
    for (int i = 0; i < N; ++i)
      for (int j = i + 1; j < N; ++j)
        if (z[static_cast<std::size_t>(i)] == z[static_cast<std::size_t>(j)]) {
          const double q = p * psi(i) * psi(j);
          mean += q;
          var += q * (1.0 - q);
          total += a(i, j);
        }
  }
  EXPECT_LE(std::abs(total - mean), 4.0 * std::sqrt(var)) << "observed " << total << " expected " << mean;
}

TEST(Simulator, EdgeFrequenciesConverge) {
  const Labels z{0, 0, 1, 1, 2, 2};
  Vector theta(6);
  theta << 1.2, 0.8, 1.5, 0.5, 1.0, 1.0;
  const Matrix p = edge_probabilities(z, 0.5 * reference_block(), theta);
  const int reps = 600;
  Matrix freq = Matrix::Zero(6, 6);
  Engine g(2024);
  for (int r = 0; r < reps; ++r) freq += sample_adjacency(p, g);
  freq /= reps;
  for (int i = 0; i < 6; ++i)
    for (int j = i + 1; j < 6; ++j) EXPECT_LE(std::abs(freq(i, j) - p(i, j)), 3.0 / std::sqrt(reps)) << i << "," << j;
}

TEST(Simulator, ClipsProbabilitiesAboveOne) {
  const Labels z{0, 0};
  Vector theta(2);
  theta << 2.0, 2.0;
  Matrix b(1, 1);
  b << 0.5;
  long clipped = 0;
  const Matrix p = edge_probabilities(z, b, theta, &clipped);
  EXPECT_EQ(p(0, 1), 1.0);
  EXPECT_EQ(clipped, 1);
}

// Single block, uniform weights, alpha = 0: A = b J (diagonal included), all
// degrees n b, tau = n b, so L = J / (2n) with top eigenvalue 1/2.
TEST(PopulationSimilarity, SingleBlockClosedForm) {
  const int n = 7;
  const Labels z(n, 0);
  Matrix b(1, 1);
  b << 0.4;
  const Matrix s = population_similarity(z, b, Vector::Ones(n), Matrix(n, 0), 0.0);
  EXPECT_LT((s - Matrix::Constant(n, n, 1.0 / (2.0 * n))).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(linalg::eigenvalues_descending(s)(0), 0.5, 1e-12);
}

TEST(PopulationSimilarity, SeparatedBlocksHaveRankTwo) {
  const Labels z{0, 0, 0, 1, 1, 1, 1};
  Matrix b(2, 2);
  b << 0.7, 0.0, 0.0, 0.4;
  const Matrix s = population_similarity(z, b, Vector::Ones(7), Matrix(7, 0), 0.0);
  const Vector ev = linalg::eigenvalues_descending(s);
  int nonzero = 0;
  for (Index i = 0; i < ev.size(); ++i) nonzero += std::abs(ev(i)) > 1e-12;
  EXPECT_EQ(nonzero, 2);
}

TEST(PopulationSimilarity, ZeroDegreeIsDegenerate) {
  const Labels z{0, 0};
  Matrix b(1, 1);
  b << 0.0;
  EXPECT_THROW(population_similarity(z, b, Vector::Ones(2), Matrix(2, 0), 0.0), NumericalError);
}

// Row-normalized leading eigenvectors of the population similarity coincide
// exactly for nodes in the same group.
TEST(PopulationSimilarity, NormalizedEigenvectorRowsConstantWithinGroups) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Engine g(seed);
    const int K = 2 + static_cast<int>(seed % 3), n = 12 + static_cast<int>(seed);
    Labels z(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = i % K;
    Matrix b = Matrix::Constant(K, K, 0.1);
    for (int k = 0; k < K; ++k) b(k, k) = 0.5 + 0.1 * k;
    Vector theta(n);
    for (int i = 0; i < n; ++i) theta(i) = 0.5 + uniform01(g);
    const Matrix s = population_similarity(z, b, theta, Matrix(n, 0), 0.0);
    const auto ep = linalg::top_k_by_magnitude(s, K);
    Matrix u = ep.vectors;
    for (Index i = 0; i < u.rows(); ++i) u.row(i).normalize();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (z[static_cast<std::size_t>(i)] == z[static_cast<std::size_t>(j)]) EXPECT_LT((u.row(i) - u.row(j)).norm(), 1e-8);
        else EXPECT_GT((u.row(i) - u.row(j)).norm(), 1e-3);
  }
}
