#include "hoverid/kernels.hpp"

#include <vector>

#ifdef HOVERID_OPENMP
#include <omp.h>
#endif

namespace hoverid::kernels {

namespace serial {

Matrix gram(const Matrix& jac) {
  const std::size_t m = jac.rows();
  const std::size_t n = jac.cols();
  Matrix g(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < m; ++k) acc += jac(k, i) * jac(k, j);
      g(i, j) = acc;
      g(j, i) = acc;
    }
  }
  return g;
}

Vector transpose_times(const Matrix& jac, std::span<const double> r) {
  if (r.size() != jac.rows()) throw Error(ErrorCode::DimensionMismatch, "J^T r shape");
  Vector out(jac.cols(), 0.0);
  for (std::size_t i = 0; i < jac.cols(); ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < jac.rows(); ++k) acc += jac(k, i) * r[k];
    out[i] = acc;
  }
  return out;
}

void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn) {
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

}  // namespace serial

namespace parallel {

Matrix gram(const Matrix& jac) {
  const std::size_t m = jac.rows();
  const std::size_t n = jac.cols();
  // Column-contiguous copy so each dot product streams memory.
  const Matrix jt = jac.transposed();
  Matrix g(n, n);
  const auto ni = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t si = 0; si < ni; ++si) {
    const auto i = static_cast<std::size_t>(si);
    const double* a = jt.row(i).data();
    for (std::size_t j = i; j < n; ++j) {
      const double* b = jt.row(j).data();
      double acc = 0.0;
      for (std::size_t k = 0; k < m; ++k) acc += a[k] * b[k];
      g(i, j) = acc;
      g(j, i) = acc;
    }
  }
  return g;
}

Vector transpose_times(const Matrix& jac, std::span<const double> r) {
  if (r.size() != jac.rows()) throw Error(ErrorCode::DimensionMismatch, "J^T r shape");
  const std::size_t m = jac.rows();
  const std::size_t n = jac.cols();
  const Matrix jt = jac.transposed();
  Vector out(n, 0.0);
  const auto ni = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t si = 0; si < ni; ++si) {
    const auto i = static_cast<std::size_t>(si);
    const double* a = jt.row(i).data();
    double acc = 0.0;
    for (std::size_t k = 0; k < m; ++k) acc += a[k] * r[k];
    out[i] = acc;
  }
  return out;
}

void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  const auto ni = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t si = 0; si < ni; ++si) {
    try {
      fn(static_cast<std::size_t>(si));
    } catch (...) {
      errors[static_cast<std::size_t>(si)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace parallel

Matrix gram(const Matrix& jac) {
#ifdef HOVERID_OPENMP
  return parallel::gram(jac);
#else
  return serial::gram(jac);
#endif
}

Vector transpose_times(const Matrix& jac, std::span<const double> r) {
#ifdef HOVERID_OPENMP
  return parallel::transpose_times(jac, r);
#else
  return serial::transpose_times(jac, r);
#endif
}

void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn) {
#ifdef HOVERID_OPENMP
  parallel::for_each_index(n, fn);
#else
  serial::for_each_index(n, fn);
#endif
}

int max_threads() {
#ifdef HOVERID_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace hoverid::kernels
