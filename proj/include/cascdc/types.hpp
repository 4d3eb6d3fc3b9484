#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cascdc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Group labels for one period, 0-based, one entry per node.
using Labels = std::vector<int>;

// Error hierarchy. The CLI maps each family onto an exit code.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or an impossible configuration (K > N, K >= N, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Non-convergence or a degenerate numerical state that cannot be recovered.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Insufficient history for a strict smoothing window, out-of-panel dates.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// File parsing failures; the message carries row/column context.
class IngestError : public Error {
 public:
  using Error::Error;
};

inline void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw DimensionError(std::string(what) + ": expected a square matrix, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

inline bool is_symmetric(const Matrix& m, double tol = 1e-12) {
  if (m.rows() != m.cols()) return false;
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = i + 1; j < m.cols(); ++j)
      if (std::abs(m(i, j) - m(j, i)) > tol) return false;
  return true;
}

}  // namespace cascdc
