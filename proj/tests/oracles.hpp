#pragma once

// Independent reference computations for the tests. Nothing here calls into
// the library's algorithms.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_bin_float.hpp>

namespace oracle {

/// Smallest mismatch fraction over every bijection, by recursive enumeration.
inline double misclustering(const std::vector<int>& a, const std::vector<int>& b, int K) {
  std::vector<int> perm(static_cast<std::size_t>(K), -1);
  std::vector<char> used(static_cast<std::size_t>(K), 0);
  int best = -1;
  std::function<void(int)> rec = [&](int k) {
    if (k == K) {
      int agree = 0;
      for (std::size_t i = 0; i < a.size(); ++i) agree += perm[static_cast<std::size_t>(a[i])] == b[i];
      best = std::max(best, agree);
      return;
    }
    for (int c = 0; c < K; ++c)
      if (!used[static_cast<std::size_t>(c)]) {
        used[static_cast<std::size_t>(c)] = 1;
        perm[static_cast<std::size_t>(k)] = c;
        rec(k + 1);
        used[static_cast<std::size_t>(c)] = 0;
      }
  };
  rec(0);
  return 1.0 - static_cast<double>(best) / static_cast<double>(a.size());
}

/// Best k-means objective over every assignment of n rows to 2 clusters.
inline double best_two_partition(const Eigen::MatrixXd& x, std::vector<int>* labels = nullptr) {
  const int n = static_cast<int>(x.rows());
  double best = INFINITY;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    double obj = 0.0;
    for (int c = 0; c < 2; ++c) {
      Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(x.cols());
      int cnt = 0;
      for (int i = 0; i < n; ++i)
        if (static_cast<int>((mask >> i) & 1u) == c) {
          mean += x.row(i);
          ++cnt;
        }
      if (cnt == 0) continue;
      mean /= cnt;
      for (int i = 0; i < n; ++i)
        if (static_cast<int>((mask >> i) & 1u) == c) obj += (x.row(i) - mean).squaredNorm();
    }
    if (obj < best) {
      best = obj;
      if (labels) {
        labels->assign(static_cast<std::size_t>(n), 0);
        for (int i = 0; i < n; ++i) (*labels)[static_cast<std::size_t>(i)] = static_cast<int>((mask >> i) & 1u);
      }
    }
  }
  return best;
}

/// Same partition up to relabeling.
inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j)
      if ((a[i] == a[j]) != (b[i] == b[j])) return false;
  return true;
}

/// Gaussian elimination with partial pivoting in long double.
inline std::vector<long double> solve(std::vector<std::vector<long double>> a, std::vector<long double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::fabs(a[r][c]) > std::fabs(a[p][c])) p = r;
    std::swap(a[c], a[p]);
    std::swap(b[c], b[p]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const long double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<long double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    long double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return x;
}

/// Kernel weights by the normal equations of the polynomial ansatz
/// W(i) = sum_m c_m u^m with u = i/r: sum_i u^k W(i) = n [k==0].
inline std::vector<long double> kernel(int r, int l) {
  const int m = std::min(l, r) + 1, n = r + 1;
  auto u = [&](int idx) { return r == 0 ? 0.0L : static_cast<long double>(idx - r) / r; };
  std::vector<std::vector<long double>> g(static_cast<std::size_t>(m), std::vector<long double>(static_cast<std::size_t>(m), 0.0L));
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] += std::pow(u(i), k + j);
  std::vector<long double> rhs(static_cast<std::size_t>(m), 0.0L);
  rhs[0] = n;
  const std::vector<long double> c = solve(g, rhs);
  std::vector<long double> w(static_cast<std::size_t>(n), 0.0L);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < m; ++k) w[static_cast<std::size_t>(i)] += c[static_cast<std::size_t>(k)] * std::pow(u(i), k);
  return w;
}

using BigFloat = boost::multiprecision::cpp_bin_float_100;

/// The uniform misclustering bound evaluated in 100-digit arithmetic, with
/// l! as an integer product.
inline BigFloat bound(double N, double T, double K, double r, double s, double P_max, double delta, double lambda, double m_z,
                      double W, double c_w, double eps, double L, double beta, int l, double conf) {
  using boost::multiprecision::log;
  using boost::multiprecision::pow;
  using boost::multiprecision::sqrt;
  const BigFloat n(N), t(T), k(K), rr(r), ss(s), p(P_max), d(delta), lam(lambda), m(m_z), w(W), cw(c_w), e(eps), ll(L), be(beta),
      cf(conf);
  const BigFloat b = sqrt(3 * log(8 * n * t / cf));
  BigFloat fact = 1;
  for (int i = 2; i <= l; ++i) fact *= i;
  const BigFloat c = 512 * (2 + e) * (2 + e);
  const BigFloat brace = (4 + 2 * cw) * b / sqrt(d) + (2 * k / b) * (sqrt(2 * p * rr * ss) + 2 * p) +
                         n * ll / (b * b * fact) * (rr == 0 ? BigFloat(0) : pow(rr / t, be));
  return c * k * w * w / (m * m * n * lam * lam) * brace * brace;
}

}  // namespace oracle
