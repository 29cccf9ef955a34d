#include "hoverid/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hoverid {

namespace {

double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double centered_sum_squares(std::span<const double> x, double mean) {
  double s = 0.0;
  for (double v : x) s += (v - mean) * (v - mean);
  return s;
}

}  // namespace

Vector autocorrelation(std::span<const double> e, std::size_t max_lag) {
  const std::size_t n = e.size();
  if (max_lag < 1 || n <= max_lag) throw Error(ErrorCode::TooShort, "autocorrelation needs N > max_lag >= 1");
  const double m = mean_of(e);
  const double denom = centered_sum_squares(e, m);
  if (!(denom > 0.0)) throw Error(ErrorCode::ZeroVariance, "autocorrelation of a constant sequence");
  Vector rho(max_lag + 1);
  for (std::size_t k = 0; k <= max_lag; ++k) {
    double acc = 0.0;
    for (std::size_t t = 0; t + k < n; ++t) acc += (e[t] - m) * (e[t + k] - m);
    rho[k] = acc / denom;
  }
  rho[0] = 1.0;
  return rho;
}

Vector cross_correlation(std::span<const double> e, std::span<const double> u, std::size_t max_lag) {
  const std::size_t n = e.size();
  if (u.size() != n) throw Error(ErrorCode::DimensionMismatch, "cross-correlation sequence lengths differ");
  if (max_lag < 1 || n <= max_lag) throw Error(ErrorCode::TooShort, "cross-correlation needs N > max_lag >= 1");
  const double me = mean_of(e);
  const double mu = mean_of(u);
  const double se = centered_sum_squares(e, me);
  const double su = centered_sum_squares(u, mu);
  if (!(se > 0.0) || !(su > 0.0)) throw Error(ErrorCode::ZeroVariance, "cross-correlation of a constant sequence");
  // N sd_e sd_u with population standard deviations.
  const double denom = std::sqrt(se * su);
  const auto lag = static_cast<std::ptrdiff_t>(max_lag);
  const auto sn = static_cast<std::ptrdiff_t>(n);
  Vector rho(2 * max_lag + 1);
  for (std::ptrdiff_t k = -lag; k <= lag; ++k) {
    double acc = 0.0;
    const std::ptrdiff_t t0 = std::max<std::ptrdiff_t>(0, -k);
    const std::ptrdiff_t t1 = std::min<std::ptrdiff_t>(sn, sn - k);
    for (std::ptrdiff_t t = t0; t < t1; ++t) {
      acc += (e[static_cast<std::size_t>(t)] - me) * (u[static_cast<std::size_t>(t + k)] - mu);
    }
    rho[static_cast<std::size_t>(k + lag)] = acc / denom;
  }
  return rho;
}

double confidence_band(std::size_t n) { return 2.58 / std::sqrt(static_cast<double>(n)); }

Histogram histogram(std::span<const double> x) {
  if (x.empty()) throw Error(ErrorCode::EmptySequence, "histogram of an empty sequence");
  const auto bins = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(x.size())))) + 1;
  double lo = *std::min_element(x.begin(), x.end());
  double hi = *std::max_element(x.begin(), x.end());
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  Histogram h;
  h.edges.resize(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + width * static_cast<double>(i);
  h.edges[bins] = hi;
  h.counts.assign(bins, 0);
  for (double v : x) {
    auto idx = static_cast<std::size_t>((v - lo) / width);
    idx = std::min(idx, bins - 1);
    ++h.counts[idx];
  }
  return h;
}

double nrmse(std::span<const double> y, std::span<const double> y_hat) {
  if (y.empty()) throw Error(ErrorCode::EmptySequence, "nrmse of an empty sequence");
  if (y.size() != y_hat.size()) throw Error(ErrorCode::DimensionMismatch, "nrmse sequence lengths differ");
  const double m = mean_of(y);
  double num = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) num += (y[t] - y_hat[t]) * (y[t] - y_hat[t]);
  const double den = centered_sum_squares(y, m);
  if (num == 0.0) return 0.0;
  if (den == 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(num / den);
}

}  // namespace hoverid
