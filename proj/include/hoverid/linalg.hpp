#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "hoverid/matrix.hpp"

namespace hoverid {

// LU factorization with partial pivoting. A pivot counts as zero when its
// magnitude falls below kPivotThreshold times the largest row sum of the
// original matrix.
template <typename T>
class LuFactorization {
 public:
  static constexpr double kPivotThreshold = 1e-14;

  explicit LuFactorization(BasicMatrix<T> a) : lu_(std::move(a)), perm_(lu_.rows()) {
    if (!lu_.is_square() || lu_.rows() == 0) {
      throw Error(ErrorCode::DimensionMismatch, "LU requires a non-empty square matrix");
    }
    const std::size_t n = lu_.rows();
    const double tiny = kPivotThreshold * lu_.norm_inf();
    for (std::size_t i = 0; i < n; ++i) perm_[i] = i;

    for (std::size_t k = 0; k < n; ++k) {
      std::size_t p = k;
      double best = std::abs(lu_(k, k));
      for (std::size_t i = k + 1; i < n; ++i) {
        const double v = std::abs(lu_(i, k));
        if (v > best) {
          best = v;
          p = i;
        }
      }
      if (!(best >= tiny) || best == 0.0) {
        throw Error(ErrorCode::SingularMatrix, "pivot below threshold in column " + std::to_string(k));
      }
      if (p != k) {
        for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(p, j));
        std::swap(perm_[k], perm_[p]);
        sign_ = -sign_;
      }
      const T pivot = lu_(k, k);
      for (std::size_t i = k + 1; i < n; ++i) {
        const T f = lu_(i, k) / pivot;
        lu_(i, k) = f;
        if (f == T{}) continue;
        for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= f * lu_(k, j);
      }
    }
  }

  std::size_t order() const noexcept { return lu_.rows(); }

  BasicMatrix<T> solve(const BasicMatrix<T>& b) const {
    const std::size_t n = lu_.rows();
    if (b.rows() != n) throw Error(ErrorCode::DimensionMismatch, "right-hand side rows");
    BasicMatrix<T> x(n, b.cols());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < b.cols(); ++j) x(i, j) = b(perm_[i], j);
    for (std::size_t c = 0; c < b.cols(); ++c) {
      for (std::size_t i = 1; i < n; ++i) {
        T acc = x(i, c);
        for (std::size_t k = 0; k < i; ++k) acc -= lu_(i, k) * x(k, c);
        x(i, c) = acc;
      }
      for (std::size_t i = n; i-- > 0;) {
        T acc = x(i, c);
        for (std::size_t k = i + 1; k < n; ++k) acc -= lu_(i, k) * x(k, c);
        x(i, c) = acc / lu_(i, i);
      }
    }
    return x;
  }

  std::vector<T> solve(const std::vector<T>& b) const {
    return solve(BasicMatrix<T>::column(b)).storage();
  }

  T determinant() const {
    T det = static_cast<T>(sign_);
    for (std::size_t i = 0; i < lu_.rows(); ++i) det *= lu_(i, i);
    return det;
  }

 private:
  BasicMatrix<T> lu_;
  std::vector<std::size_t> perm_;
  int sign_ = 1;
};

Matrix lu_solve(const Matrix& a, const Matrix& b);
ComplexMatrix lu_solve(const ComplexMatrix& a, const ComplexMatrix& b);
double determinant(const Matrix& a);

// Eigenvalues of a real square matrix: balancing, Householder reduction to
// upper Hessenberg form, then Francis double-shift QR. Conjugate pairs are
// exact conjugates of one another. Sorted by ascending |Re|, then ascending
// |Im|, then positive imaginary part first.
std::vector<Complex> eigenvalues(const Matrix& a);

// Matrix exponential by scaling and squaring with a [6/6] Pade approximant.
Matrix expm(const Matrix& a);

}  // namespace hoverid
