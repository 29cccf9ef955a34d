#include "hoverid/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace hoverid {

Matrix lu_solve(const Matrix& a, const Matrix& b) { return LuFactorization<double>(a).solve(b); }

ComplexMatrix lu_solve(const ComplexMatrix& a, const ComplexMatrix& b) {
  return LuFactorization<Complex>(a).solve(b);
}

double determinant(const Matrix& a) {
  try {
    return LuFactorization<double>(a).determinant();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SingularMatrix) return 0.0;
    throw;
  }
}

namespace {

constexpr double kDeflationTolerance = 1e-13;

// Diagonal similarity scaling by powers of two so that row and column norms
// are comparable. Exact in floating point, leaves eigenvalues unchanged.
void balance(Matrix& a) {
  const std::size_t n = a.rows();
  constexpr double radix = 2.0;
  constexpr double sqrdx = radix * radix;
  bool done = false;
  while (!done) {
    done = true;
    for (std::size_t i = 0; i < n; ++i) {
      double c = 0.0;
      double r = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(a(j, i));
        r += std::abs(a(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / radix;
      double f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= radix;
        c *= sqrdx;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= sqrdx;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        for (std::size_t j = 0; j < n; ++j) a(i, j) /= f;
        for (std::size_t j = 0; j < n; ++j) a(j, i) *= f;
      }
    }
  }
}

void reduce_to_hessenberg(Matrix& h) {
  const std::size_t n = h.rows();
  std::vector<double> v(n);
  for (std::size_t k = 0; k + 2 < n; ++k) {
    double norm = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) norm += h(i, k) * h(i, k);
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;
    const double alpha = -std::copysign(norm, h(k + 1, k));
    double vv = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) {
      v[i] = h(i, k);
      if (i == k + 1) v[i] -= alpha;
      vv += v[i] * v[i];
    }
    if (vv == 0.0) continue;
    const double beta = 2.0 / vv;
    for (std::size_t j = k; j < n; ++j) {
      double d = 0.0;
      for (std::size_t i = k + 1; i < n; ++i) d += v[i] * h(i, j);
      d *= beta;
      for (std::size_t i = k + 1; i < n; ++i) h(i, j) -= d * v[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      double d = 0.0;
      for (std::size_t j = k + 1; j < n; ++j) d += h(i, j) * v[j];
      d *= beta;
      for (std::size_t j = k + 1; j < n; ++j) h(i, j) -= d * v[j];
    }
    h(k + 1, k) = alpha;
    for (std::size_t i = k + 2; i < n; ++i) h(i, k) = 0.0;
  }
}

struct Reflector {
  std::array<double, 3> w{};
  double beta = 0.0;
  double alpha = 0.0;
};

// Householder reflector mapping (x, y, z) onto alpha * e1. Pass z = 0 with
// size 2 for the closing 2x2 reflection of a Francis sweep.
Reflector make_reflector(double x, double y, double z) {
  Reflector r;
  const double norm = std::sqrt(x * x + y * y + z * z);
  if (norm == 0.0) return r;
  r.alpha = -std::copysign(norm, x);
  r.w = {x - r.alpha, y, z};
  const double ww = r.w[0] * r.w[0] + r.w[1] * r.w[1] + r.w[2] * r.w[2];
  r.beta = ww == 0.0 ? 0.0 : 2.0 / ww;
  return r;
}

// One implicit double-shift sweep on the active window h[lo..hi][lo..hi].
void francis_sweep(Matrix& h, std::size_t lo, std::size_t hi, bool exceptional) {
  double s;
  double t;
  if (exceptional) {
    const double w = std::abs(h(hi, hi - 1)) + std::abs(h(hi - 1, hi - 2));
    s = 1.5 * w;
    t = w * w;
  } else {
    s = h(hi - 1, hi - 1) + h(hi, hi);
    t = h(hi - 1, hi - 1) * h(hi, hi) - h(hi - 1, hi) * h(hi, hi - 1);
  }
  double x = h(lo, lo) * h(lo, lo) + h(lo, lo + 1) * h(lo + 1, lo) - s * h(lo, lo) + t;
  double y = h(lo + 1, lo) * (h(lo, lo) + h(lo + 1, lo + 1) - s);
  double z = h(lo + 1, lo) * h(lo + 2, lo + 1);

  for (std::size_t k = lo; k + 2 <= hi; ++k) {
    const Reflector r = make_reflector(x, y, z);
    if (r.beta != 0.0) {
      const std::size_t c0 = k > lo ? k - 1 : lo;
      for (std::size_t j = c0; j <= hi; ++j) {
        const double d = r.beta * (r.w[0] * h(k, j) + r.w[1] * h(k + 1, j) + r.w[2] * h(k + 2, j));
        h(k, j) -= d * r.w[0];
        h(k + 1, j) -= d * r.w[1];
        h(k + 2, j) -= d * r.w[2];
      }
      if (k > lo) {
        h(k, k - 1) = r.alpha;
        h(k + 1, k - 1) = 0.0;
        h(k + 2, k - 1) = 0.0;
      }
      const std::size_t r_end = std::min(k + 3, hi);
      for (std::size_t i = lo; i <= r_end; ++i) {
        const double d = r.beta * (h(i, k) * r.w[0] + h(i, k + 1) * r.w[1] + h(i, k + 2) * r.w[2]);
        h(i, k) -= d * r.w[0];
        h(i, k + 1) -= d * r.w[1];
        h(i, k + 2) -= d * r.w[2];
      }
    }
    x = h(k + 1, k);
    y = h(k + 2, k);
    if (k + 3 <= hi) z = h(k + 3, k);
  }

  const Reflector r = make_reflector(x, y, 0.0);
  if (r.beta != 0.0) {
    const std::size_t k = hi - 1;
    for (std::size_t j = k - 1; j <= hi; ++j) {
      const double d = r.beta * (r.w[0] * h(k, j) + r.w[1] * h(k + 1, j));
      h(k, j) -= d * r.w[0];
      h(k + 1, j) -= d * r.w[1];
    }
    h(k, k - 1) = r.alpha;
    h(k + 1, k - 1) = 0.0;
    for (std::size_t i = lo; i <= hi; ++i) {
      const double d = r.beta * (h(i, k) * r.w[0] + h(i, k + 1) * r.w[1]);
      h(i, k) -= d * r.w[0];
      h(i, k + 1) -= d * r.w[1];
    }
  }
}

void push_2x2_eigenvalues(const Matrix& h, std::size_t i, std::vector<Complex>& out) {
  const double a = h(i, i);
  const double b = h(i, i + 1);
  const double c = h(i + 1, i);
  const double d = h(i + 1, i + 1);
  const double p = 0.5 * (a - d);
  const double bc = b * c;
  const double disc = p * p + bc;
  if (disc >= 0.0) {
    const double z = p + std::copysign(std::sqrt(disc), p);
    const double l1 = d + z;
    const double l2 = z != 0.0 ? d - bc / z : d;
    out.emplace_back(l1, 0.0);
    out.emplace_back(l2, 0.0);
  } else {
    const double re = d + p;
    const double im = std::sqrt(-disc);
    out.emplace_back(re, im);
    out.emplace_back(re, -im);
  }
}

}  // namespace

std::vector<Complex> eigenvalues(const Matrix& a) {
  if (!a.is_square() || a.rows() == 0) {
    throw Error(ErrorCode::DimensionMismatch, "eigenvalues require a non-empty square matrix");
  }
  if (!a.all_finite()) throw Error(ErrorCode::Overflow, "non-finite matrix entry");
  const std::size_t n = a.rows();
  Matrix h = a;
  balance(h);
  reduce_to_hessenberg(h);

  double anorm = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i > 0 ? i - 1 : 0; j < n; ++j) anorm += std::abs(h(i, j));

  std::vector<Complex> out;
  out.reserve(n);
  const std::size_t max_sweeps = 100 * n;
  std::size_t sweeps = 0;
  std::size_t its = 0;
  std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(n) - 1;
  while (hi >= 0) {
    const auto uh = static_cast<std::size_t>(hi);
    std::size_t lo = uh;
    while (lo > 0) {
      double s = std::abs(h(lo - 1, lo - 1)) + std::abs(h(lo, lo));
      if (s == 0.0) s = anorm;
      if (std::abs(h(lo, lo - 1)) < kDeflationTolerance * s) {
        h(lo, lo - 1) = 0.0;
        break;
      }
      --lo;
    }
    if (lo == uh) {
      out.emplace_back(h(uh, uh), 0.0);
      hi -= 1;
      its = 0;
    } else if (lo + 1 == uh) {
      push_2x2_eigenvalues(h, lo, out);
      hi -= 2;
      its = 0;
    } else {
      if (++sweeps > max_sweeps) {
        throw Error(ErrorCode::NoConvergence, "QR iteration exceeded " + std::to_string(max_sweeps) + " sweeps");
      }
      ++its;
      francis_sweep(h, lo, uh, its % 10 == 0);
    }
  }

  std::stable_sort(out.begin(), out.end(), [](const Complex& x, const Complex& y) {
    const double rx = std::abs(x.real());
    const double ry = std::abs(y.real());
    if (rx != ry) return rx < ry;
    const double ix = std::abs(x.imag());
    const double iy = std::abs(y.imag());
    if (ix != iy) return ix < iy;
    return x.imag() > y.imag();
  });
  return out;
}

Matrix expm(const Matrix& a) {
  if (!a.is_square() || a.rows() == 0) {
    throw Error(ErrorCode::DimensionMismatch, "expm requires a non-empty square matrix");
  }
  if (!a.all_finite()) throw Error(ErrorCode::Overflow, "non-finite matrix entry");
  const std::size_t n = a.rows();
  constexpr int q = 6;

  const double norm = a.norm1();
  int squarings = 0;
  double scale = 1.0;
  while (norm * scale > 0.5) {
    scale *= 0.5;
    ++squarings;
  }
  const Matrix x0 = a * scale;

  Matrix x = x0;
  double c = 0.5;
  Matrix num = Matrix::identity(n) + x0 * c;
  Matrix den = Matrix::identity(n) - x0 * c;
  bool positive = true;
  for (int k = 2; k <= q; ++k) {
    c *= static_cast<double>(q - k + 1) / static_cast<double>(k * (2 * q - k + 1));
    x = x0 * x;
    num += x * c;
    if (positive) {
      den += x * c;
    } else {
      den -= x * c;
    }
    positive = !positive;
  }
  Matrix e = lu_solve(den, num);
  for (int k = 0; k < squarings; ++k) e = e * e;
  if (!e.all_finite()) throw Error(ErrorCode::Overflow, "matrix exponential overflowed");
  return e;
}

}  // namespace hoverid
