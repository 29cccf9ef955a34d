#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "hoverid/matrix.hpp"

namespace testsupport {

using hoverid::Matrix;
using hoverid::Vector;

inline Matrix random_matrix(std::mt19937_64& g, std::size_t rows, std::size_t cols, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = d(g);
  return m;
}

inline Vector random_vector(std::mt19937_64& g, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Vector v(n);
  for (double& x : v) x = d(g);
  return v;
}

// Diagonally dominant, hence well conditioned.
inline Matrix well_conditioned(std::mt19937_64& g, std::size_t n) {
  Matrix m = random_matrix(g, n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) += static_cast<double>(n) + 1.0;
  return m;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}

// Relative error used for finite-difference comparisons.
inline double rel_err(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace testsupport
