#pragma once

// Two-stage adaptive Lasso by cyclic coordinate descent.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "cascdc/types.hpp"

namespace cascdc::lasso {

enum class LambdaRule { BIC, CrossValidation };

struct Config {
  double gamma = 1.0;            ///< adaptive weight exponent
  double ridge_scale = 1e-3;     ///< pilot ridge penalty = ridge_scale * trace(X'X) / p
  double weight_floor = 1e-8;    ///< w_j = 1 / (|b~_j|^gamma + weight_floor)
  double tolerance = 1e-7;       ///< max coefficient change per sweep
  int max_sweeps = 10000;
  int grid_size = 50;
  double grid_ratio = 1e-4;      ///< smallest lambda / largest lambda
  LambdaRule rule = LambdaRule::BIC;
  int cv_folds = 5;
  /// Overrides the log grid when non-empty.
  std::vector<double> lambda_grid;
};

struct Path {
  std::vector<double> lambdas;
  std::vector<Vector> coefficients;
  std::vector<double> rss;
};

/// Ridge pilot estimate.
inline Vector ridge(const Matrix& x, const Vector& y, double scale) {
  const Index p = x.cols();
  if (p == 0) return Vector();
  const Matrix g = x.transpose() * x;
  const double pen = scale * g.trace() / static_cast<double>(p);
  Matrix a = g;
  a.diagonal().array() += std::max(pen, 1e-12);
  return a.ldlt().solve(x.transpose() * y);
}

inline Vector adaptive_weights(const Vector& pilot, double gamma, double floor) {
  Vector w(pilot.size());
  for (Index j = 0; j < pilot.size(); ++j) w(j) = 1.0 / (std::pow(std::abs(pilot(j)), gamma) + floor);
  return w;
}

inline double soft_threshold(double z, double g) {
  if (z > g) return z - g;
  if (z < -g) return z + g;
  return 0.0;
}

/// Minimizes ||y - X b||^2 + lambda * sum_j w_j |b_j| from the warm start `b`.
inline void coordinate_descent(const Matrix& x, const Vector& y, const Vector& w, double lambda, Vector& b, const Config& cfg) {
  const Index p = x.cols();
  Vector col_sq(p);
  for (Index j = 0; j < p; ++j) col_sq(j) = x.col(j).squaredNorm();
  Vector resid = y - x * b;
  for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Index j = 0; j < p; ++j) {
      if (col_sq(j) == 0.0) continue;
      const double old = b(j);
      const double rho = x.col(j).dot(resid) + col_sq(j) * old;
      const double next = soft_threshold(rho, 0.5 * lambda * w(j)) / col_sq(j);
      if (next != old) {
        resid -= (next - old) * x.col(j);
        b(j) = next;
        max_change = std::max(max_change, std::abs(next - old));
      }
    }
    if (max_change < cfg.tolerance) return;
  }
}

/// Smallest lambda with an all-zero solution.
inline double lambda_max(const Matrix& x, const Vector& y, const Vector& w) {
  double lm = 0.0;
  for (Index j = 0; j < x.cols(); ++j)
    if (w(j) > 0.0) lm = std::max(lm, 2.0 * std::abs(x.col(j).dot(y)) / w(j));
  return lm;
}

inline std::vector<double> lambda_grid(const Matrix& x, const Vector& y, const Vector& w, const Config& cfg) {
  if (!cfg.lambda_grid.empty()) {
    std::vector<double> g = cfg.lambda_grid;
    std::sort(g.begin(), g.end(), std::greater<>());
    return g;
  }
  const double top = lambda_max(x, y, w);
  std::vector<double> g;
  if (top <= 0.0) return {0.0};
  const int m = std::max(cfg.grid_size, 2);
  for (int k = 0; k < m; ++k) g.push_back(top * std::pow(cfg.grid_ratio, static_cast<double>(k) / (m - 1)));
  return g;
}

/// Warm-started path over a decreasing lambda grid.
inline Path solve_path(const Matrix& x, const Vector& y, const Vector& w, const std::vector<double>& grid, const Config& cfg) {
  Path path;
  Vector b = Vector::Zero(x.cols());
  for (double lam : grid) {
    coordinate_descent(x, y, w, lam, b, cfg);
    path.lambdas.push_back(lam);
    path.coefficients.push_back(b);
    path.rss.push_back((y - x * b).squaredNorm());
  }
  return path;
}

inline int support_size(const Vector& b, double tol = 1e-10) {
  int df = 0;
  for (Index j = 0; j < b.size(); ++j) df += std::abs(b(j)) > tol;
  return df;
}

/// n log(RSS/n) + df log n.
inline double bic(double rss, int df, Index n) {
  const double nn = static_cast<double>(n);
  return nn * std::log(std::max(rss, 1e-300) / nn) + df * std::log(nn);
}

struct Selection {
  Vector coefficients;
  double lambda = 0.0;
  Vector weights;
};

/// Adaptive Lasso on already centred/standardized data.
inline Selection fit(const Matrix& x, const Vector& y, const Config& cfg) {
  Selection out;
  const Index n = x.rows(), p = x.cols();
  out.coefficients = Vector::Zero(p);
  if (p == 0 || n == 0) return out;
  out.weights = adaptive_weights(ridge(x, y, cfg.ridge_scale), cfg.gamma, cfg.weight_floor);
  const std::vector<double> grid = lambda_grid(x, y, out.weights, cfg);
  if (cfg.rule == LambdaRule::BIC || cfg.cv_folds < 2 || n < 2 * cfg.cv_folds) {
    const Path path = solve_path(x, y, out.weights, grid, cfg);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < path.lambdas.size(); ++k) {
      const double score = bic(path.rss[k], support_size(path.coefficients[k]), n);
      if (score < best) {
        best = score;
        out.coefficients = path.coefficients[k];
        out.lambda = path.lambdas[k];
      }
    }
    return out;
  }
  // Contiguous-block cross-validation over the same grid.
  std::vector<double> cv(grid.size(), 0.0);
  for (int f = 0; f < cfg.cv_folds; ++f) {
    const Index lo = n * f / cfg.cv_folds, hi = n * (f + 1) / cfg.cv_folds;
    Matrix xt(n - (hi - lo), p);
    Vector yt(n - (hi - lo));
    Index r = 0;
    for (Index i = 0; i < n; ++i)
      if (i < lo || i >= hi) {
        xt.row(r) = x.row(i);
        yt(r++) = y(i);
      }
    const Path path = solve_path(xt, yt, out.weights, grid, cfg);
    for (std::size_t k = 0; k < grid.size(); ++k)
      cv[k] += (y.segment(lo, hi - lo) - x.middleRows(lo, hi - lo) * path.coefficients[k]).squaredNorm();
  }
  const std::size_t best = static_cast<std::size_t>(std::min_element(cv.begin(), cv.end()) - cv.begin());
  Vector b = Vector::Zero(p);
  for (std::size_t k = 0; k <= best; ++k) coordinate_descent(x, y, out.weights, grid[k], b, cfg);
  out.coefficients = b;
  out.lambda = grid[best];
  return out;
}

}  // namespace cascdc::lasso
