#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "cascdc/types.hpp"

namespace cascdc::linalg {

/// Above this size the top-K eigenpairs come from orthogonal iteration
/// instead of a full dense decomposition.
inline constexpr Index kDenseEigenLimit = 2000;

struct EigenPairs {
  Vector values;   ///< in the order requested by the producer
  Matrix vectors;  ///< columns match `values`
};

/// All eigenvalues of a symmetric matrix, descending by algebraic value.
inline Vector eigenvalues_descending(const Matrix& s) {
  require_square(s, "eigenvalues_descending");
  if (s.rows() == 0) return Vector();
  Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("symmetric eigen-solver did not converge");
  return es.eigenvalues().reverse();
}

/// Largest absolute eigenvalue of a symmetric matrix.
inline double abs_top_eigenvalue(const Matrix& s) {
  const Vector ev = eigenvalues_descending(s);
  if (ev.size() == 0) return 0.0;
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

/// Makes the largest-magnitude entry of every column positive.
inline void fix_signs(Matrix& vectors) {
  for (Index c = 0; c < vectors.cols(); ++c) {
    Index arg = 0;
    double best = -1.0;
    for (Index r = 0; r < vectors.rows(); ++r) {
      const double a = std::abs(vectors(r, c));
      // strict comparison with a small slack keeps the lowest index on near ties
      if (a > best + 1e-12) {
        best = a;
        arg = r;
      }
    }
    if (vectors.rows() > 0 && vectors(arg, c) < 0.0) vectors.col(c) *= -1.0;
  }
}

namespace detail {

inline EigenPairs top_k_orthogonal_iteration(const Matrix& s, Index k, int max_iter, double tol) {
  const Index n = s.rows();
  Matrix q = Matrix::Zero(n, k);
  for (Index c = 0; c < k; ++c)
    for (Index r = 0; r < n; ++r) q(r, c) = std::cos(0.7 * static_cast<double>((r + 1) * (c + 1))) + (r == c ? 1.0 : 0.0);
  Eigen::HouseholderQR<Matrix> qr0(q);
  q = qr0.householderQ() * Matrix::Identity(n, k);
  Vector prev = Vector::Zero(k);
  for (int it = 0; it < max_iter; ++it) {
    Matrix z = s * q;
    Eigen::HouseholderQR<Matrix> qr(z);
    q = qr.householderQ() * Matrix::Identity(n, k);
    const Matrix t = q.transpose() * s * q;
    Eigen::SelfAdjointEigenSolver<Matrix> small(t);
    const Vector vals = small.eigenvalues();
    if ((vals - prev).cwiseAbs().maxCoeff() < tol * std::max(1.0, vals.cwiseAbs().maxCoeff())) {
      q = q * small.eigenvectors();
      return {vals, q};
    }
    prev = vals;
  }
  throw NumericalError("orthogonal iteration did not converge after " + std::to_string(max_iter) +
                       " iterations (n=" + std::to_string(n) + ", k=" + std::to_string(k) + ")");
}

}  // namespace detail

/// Eigenpairs of the k largest-magnitude eigenvalues of a symmetric matrix,
/// ordered by decreasing magnitude (ties: larger algebraic value first), with
/// the sign convention of fix_signs applied.
inline EigenPairs top_k_by_magnitude(const Matrix& s, Index k) {
  require_square(s, "top_k_by_magnitude");
  const Index n = s.rows();
  if (k < 0 || k > n) throw ConfigError("top_k_by_magnitude: k out of range");
  Vector vals;
  Matrix vecs;
  if (n <= kDenseEigenLimit) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(s);
    if (es.info() != Eigen::Success)
      throw NumericalError("symmetric eigen-solver did not converge (n=" + std::to_string(n) + ")");
    vals = es.eigenvalues();
    vecs = es.eigenvectors();
  } else {
    auto p = detail::top_k_orthogonal_iteration(s, k, 1000, 1e-10);
    vals = std::move(p.values);
    vecs = std::move(p.vectors);
  }
  std::vector<Index> order(static_cast<std::size_t>(vals.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    const double ma = std::abs(vals(a)), mb = std::abs(vals(b));
    if (ma != mb) return ma > mb;
    return vals(a) > vals(b);
  });
  EigenPairs out{Vector(k), Matrix(n, k)};
  for (Index c = 0; c < k; ++c) {
    out.values(c) = vals(order[static_cast<std::size_t>(c)]);
    out.vectors.col(c) = vecs.col(order[static_cast<std::size_t>(c)]);
  }
  fix_signs(out.vectors);
  return out;
}

/// Spectral norm of a symmetric matrix by power iteration.
inline double spectral_norm_symmetric(const Matrix& m, double tol = 1e-8, int max_iter = 1000) {
  require_square(m, "spectral_norm_symmetric");
  const Index n = m.rows();
  if (n == 0) return 0.0;
  if (m.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  // Iterate on M^2 so that +lambda and -lambda of equal size do not oscillate.
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = 1.0 + 0.01 * std::sin(static_cast<double>(i + 1));
  v.normalize();
  double est = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vector w = m * (m * v);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    const double next = std::sqrt(nw);
    w /= nw;
    const bool done = std::abs(next - est) <= tol * std::max(1.0, next);
    est = next;
    v = w;
    if (done) break;
  }
  return est;
}

/// Frobenius norm; the alternative norm for the bandwidth test.
inline double frobenius_norm(const Matrix& m) { return m.norm(); }

/// Largest absolute entry.
inline double max_abs_entry(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace cascdc::linalg
