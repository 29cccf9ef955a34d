#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <span>

#include "hoverid/matrix.hpp"

// Data-parallel kernels used by the optimizers. Each kernel has a serial
// reference in kernels::serial and an OpenMP version in kernels::parallel.
// Both sum in the same order, so their results are bitwise identical and
// independent of the thread count.
namespace hoverid::kernels {

namespace serial {

// J^T J for a row-major Jacobian (rows = residuals, cols = parameters).
Matrix gram(const Matrix& jac);
// J^T r.
Vector transpose_times(const Matrix& jac, std::span<const double> r);
void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace serial

namespace parallel {

Matrix gram(const Matrix& jac);
Vector transpose_times(const Matrix& jac, std::span<const double> r);
// Runs fn(i) for i in [0, n). Calls must write to disjoint outputs. If any
// call throws, the exception from the lowest index is rethrown.
void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace parallel

// Default dispatch: the OpenMP variant when built with OpenMP.
Matrix gram(const Matrix& jac);
Vector transpose_times(const Matrix& jac, std::span<const double> r);
void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn);

int max_threads();

}  // namespace hoverid::kernels
