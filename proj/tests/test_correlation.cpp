#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "hoverid/correlation.hpp"
#include "hoverid/random.hpp"

using namespace hoverid;

TEST(Autocorrelation, WhiteNoiseInsideBand) {
  Rng r(3);
  Vector e(5000);
  for (double& v : e) v = r.gaussian();
  const Vector rho = autocorrelation(e, 20);
  ASSERT_EQ(rho.size(), 21u);
  EXPECT_DOUBLE_EQ(rho[0], 1.0);
  for (std::size_t k = 1; k <= 20; ++k) EXPECT_LT(std::abs(rho[k]), confidence_band(e.size()));
}

TEST(Autocorrelation, AlternatingSequence) {
  Vector e(100);
  for (std::size_t t = 0; t < e.size(); ++t) e[t] = (t % 2 == 0) ? 1.0 : -1.0;
  const Vector rho = autocorrelation(e, 3);
  // Direct sums: (N - k) / N with alternating sign.
  EXPECT_NEAR(rho[1], -0.99, 1e-15);
  EXPECT_NEAR(rho[2], 0.98, 1e-15);
  EXPECT_NEAR(rho[3], -0.97, 1e-15);
}

TEST(Autocorrelation, Errors) {
  EXPECT_THROW(autocorrelation(Vector(10, 2.0), 3), Error);
  EXPECT_THROW(autocorrelation(Vector{1, 2, 3}, 3), Error);
  EXPECT_THROW(autocorrelation(Vector{1, 2, 3}, 0), Error);
  try {
    autocorrelation(Vector(10, 2.0), 3);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroVariance);
  }
}

TEST(CrossCorrelation, DelayedCopyPeaksAtDelay) {
  Rng r(4);
  const std::size_t n = 4000, d = 3;
  Vector e(n), u(n, 0.0);
  for (double& v : e) v = r.gaussian();
  for (std::size_t t = 0; t + d < n; ++t) u[t + d] = e[t];
  const Vector rho = cross_correlation(e, u, 5);
  ASSERT_EQ(rho.size(), 11u);
  EXPECT_GT(rho[5 + d], 0.95);
  for (std::size_t k = 0; k < rho.size(); ++k)
    if (k != 5 + d) EXPECT_LT(std::abs(rho[k]), confidence_band(n));
}

TEST(CrossCorrelation, SwapSymmetry) {
  Rng r(5);
  Vector e(300), u(300);
  for (std::size_t t = 0; t < 300; ++t) {
    e[t] = r.gaussian();
    u[t] = r.gaussian() + 0.5 * e[t];
  }
  const Vector a = cross_correlation(e, u, 6), b = cross_correlation(u, e, 6);
  for (std::size_t k = 0; k <= 12; ++k) EXPECT_NEAR(a[k], b[12 - k], 1e-14);
}

TEST(ConfidenceBand, Value) { EXPECT_DOUBLE_EQ(confidence_band(10000), 0.0258); }

TEST(Histogram, SturgesBinsAndCounts) {
  Vector x(100);
  std::iota(x.begin(), x.end(), 0.0);
  const Histogram h = histogram(x);
  ASSERT_EQ(h.counts.size(), 8u);
  ASSERT_EQ(h.edges.size(), 9u);
  EXPECT_EQ(h.edges.front(), 0.0);
  EXPECT_EQ(h.edges.back(), 99.0);
  EXPECT_EQ(std::accumulate(h.counts.begin(), h.counts.end(), std::size_t{0}), 100u);
  EXPECT_THROW(histogram(Vector{}), Error);
}

TEST(Nrmse, Values) {
  const Vector y{1, 2, 3, 4};
  EXPECT_EQ(nrmse(y, y), 0.0);
  const Vector m(4, 2.5);
  EXPECT_DOUBLE_EQ(nrmse(y, m), 1.0);
  EXPECT_THROW(nrmse(Vector{1, 2}, Vector{1}), Error);
}

TEST(CrossCorrelation, SelfEqualsAutocorrelation) {
  Rng r(6);
  Vector e(500);
  for (std::size_t t = 0; t < e.size(); ++t) e[t] = r.gaussian() + (t > 0 ? 0.6 * e[t - 1] : 0.0);
  const Vector a = autocorrelation(e, 25), c = cross_correlation(e, e, 25);
  for (std::size_t k = 0; k <= 25; ++k) {
    EXPECT_NEAR(c[25 + k], a[k], 1e-12);
    EXPECT_NEAR(c[25 - k], a[k], 1e-12);
  }
}
