#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "cascdc/rng.hpp"
#include "cascdc/types.hpp"

namespace cascdc {

struct KMeansResult {
  Labels assignment;           ///< one label per row, in [0, K)
  Matrix centroids;            ///< K x dim
  double objective = 0.0;      ///< sum of squared distances to assigned centroids
  double best_objective = 0.0; ///< best over restarts (the optimum proxy)
  double epsilon = 0.0;
  int restarts = 0;
  /// Fewer distinct rows than K: some groups cannot be populated.
  bool degenerate_k = false;
  /// Objective after each Lloyd iteration of the returned restart.
  std::vector<double> history;
};

namespace detail {

inline double sq_dist(const Matrix& x, Index row, const Matrix& c, Index k) { return (x.row(row) - c.row(k)).squaredNorm(); }

inline int count_distinct_rows(const Matrix& x, double tol = 1e-12) {
  std::vector<Index> reps;
  for (Index i = 0; i < x.rows(); ++i) {
    bool seen = false;
    for (Index r : reps)
      if ((x.row(i) - x.row(r)).cwiseAbs().maxCoeff() <= tol) {
        seen = true;
        break;
      }
    if (!seen) reps.push_back(i);
  }
  return static_cast<int>(reps.size());
}

/// k-means++ seeding.
inline Matrix kmeanspp_init(const Matrix& x, int k, Engine& g) {
  const Index n = x.rows();
  Matrix c(k, x.cols());
  c.row(0) = x.row(static_cast<Index>(uniform_index(g, static_cast<std::uint64_t>(n))));
  std::vector<double> d2(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) d2[static_cast<std::size_t>(i)] = sq_dist(x, i, c, 0);
  for (int j = 1; j < k; ++j) {
    double total = 0.0;
    for (double v : d2) total += v;
    Index pick = 0;
    if (total > 0.0) {
      double u = uniform01(g) * total;
      pick = n - 1;
      for (Index i = 0; i < n; ++i) {
        u -= d2[static_cast<std::size_t>(i)];
        if (u < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Index>(uniform_index(g, static_cast<std::uint64_t>(n)));
    }
    c.row(j) = x.row(pick);
    for (Index i = 0; i < n; ++i) d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], sq_dist(x, i, c, j));
  }
  return c;
}

/// Nearest centroid; the lowest index wins ties.
inline int nearest(const Matrix& x, Index row, const Matrix& c, double* dist = nullptr) {
  int best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (Index k = 0; k < c.rows(); ++k) {
    const double d = sq_dist(x, row, c, k);
    if (d < bd) {
      bd = d;
      best = static_cast<int>(k);
    }
  }
  if (dist) *dist = bd;
  return best;
}

struct LloydRun {
  Labels assignment;
  Matrix centroids;
  double objective = 0.0;
  std::vector<double> history;
};

inline LloydRun lloyd(const Matrix& x, Matrix c, int max_iter) {
  const Index n = x.rows();
  const int k = static_cast<int>(c.rows());
  LloydRun run;
  run.assignment.assign(static_cast<std::size_t>(n), -1);
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      const int a = nearest(x, i, c);
      if (a != run.assignment[static_cast<std::size_t>(i)]) {
        run.assignment[static_cast<std::size_t>(i)] = a;
        changed = true;
      }
    }
    // Re-seed empty clusters with the point farthest from its centroid.
    for (int j = 0; j < k; ++j) {
      if (std::find(run.assignment.begin(), run.assignment.end(), j) != run.assignment.end()) continue;
      std::vector<int> counts(static_cast<std::size_t>(k), 0);
      for (int a : run.assignment) ++counts[static_cast<std::size_t>(a)];
      Index far = -1;
      double fd = -1.0;
      for (Index i = 0; i < n; ++i) {
        const int a = run.assignment[static_cast<std::size_t>(i)];
        if (counts[static_cast<std::size_t>(a)] < 2) continue;
        const double d = sq_dist(x, i, c, a);
        if (d > fd) {
          fd = d;
          far = i;
        }
      }
      if (far < 0) break;
      run.assignment[static_cast<std::size_t>(far)] = j;
      c.row(j) = x.row(far);
      changed = true;
    }
    Matrix sums = Matrix::Zero(k, x.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < n; ++i) {
      sums.row(run.assignment[static_cast<std::size_t>(i)]) += x.row(i);
      ++counts[static_cast<std::size_t>(run.assignment[static_cast<std::size_t>(i)])];
    }
    for (int j = 0; j < k; ++j)
      if (counts[static_cast<std::size_t>(j)] > 0) c.row(j) = sums.row(j) / counts[static_cast<std::size_t>(j)];
    double obj = 0.0;
    for (Index i = 0; i < n; ++i) obj += sq_dist(x, i, c, run.assignment[static_cast<std::size_t>(i)]);
    if (obj > prev * (1.0 + 1e-12) + 1e-14)
      throw NumericalError("k-means objective increased at iteration " + std::to_string(it) + ": " +
                           std::to_string(prev) + " -> " + std::to_string(obj));
    run.history.push_back(obj);
    prev = obj;
    if (!changed && it > 0) break;
  }
  run.centroids = std::move(c);
  run.objective = prev;
  return run;
}

/// Relabels so that groups are numbered by first appearance.
inline void canonical_relabel(Labels& labels, Matrix* centroids) {
  std::vector<int> map;
  for (int l : labels) {
    if (l >= static_cast<int>(map.size())) map.resize(static_cast<std::size_t>(l) + 1, -1);
  }
  int next = 0;
  for (int l : labels)
    if (map[static_cast<std::size_t>(l)] < 0) map[static_cast<std::size_t>(l)] = next++;
  for (int& m : map)
    if (m < 0) m = next++;
  for (int& l : labels) l = map[static_cast<std::size_t>(l)];
  if (centroids) {
    Matrix c = *centroids;
    for (std::size_t old = 0; old < map.size() && static_cast<Index>(old) < c.rows(); ++old)
      centroids->row(map[old]) = c.row(static_cast<Index>(old));
  }
}

}  // namespace detail

/// Lloyd's algorithm from k-means++ seeds over `restarts` independent seed
/// streams; the best restart is returned, so the (1+eps) contract holds
/// against the best objective found.
inline KMeansResult kmeans(const Matrix& x, int K, double eps, int restarts, const SeedStream& seed, int max_iter = 300) {
  const Index n = x.rows();
  if (K < 1) throw ConfigError("kmeans: K must be positive");
  if (n < K) throw ConfigError("kmeans: infeasible, " + std::to_string(n) + " rows for K=" + std::to_string(K));
  if (restarts < 1) restarts = 1;
  KMeansResult out;
  out.epsilon = eps;
  out.restarts = restarts;
  const int distinct = detail::count_distinct_rows(x);
  const int k_eff = std::min(K, distinct);
  out.degenerate_k = k_eff < K;
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Engine g = seed.child("restart", static_cast<std::uint64_t>(r)).engine();
    detail::LloydRun run = detail::lloyd(x, detail::kmeanspp_init(x, k_eff, g), max_iter);
    if (run.objective < best) {
      best = run.objective;
      out.assignment = std::move(run.assignment);
      out.centroids = std::move(run.centroids);
      out.history = std::move(run.history);
    }
  }
  out.objective = best;
  out.best_objective = best;
  if (k_eff < K) {
    Matrix c = Matrix::Zero(K, x.cols());
    c.topRows(k_eff) = out.centroids;
    out.centroids = std::move(c);
  }
  detail::canonical_relabel(out.assignment, &out.centroids);
  return out;
}

}  // namespace cascdc
