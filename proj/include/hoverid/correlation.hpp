#pragma once

#include <span>
#include <vector>

#include "hoverid/matrix.hpp"

namespace hoverid {

// rho(k) = sum_t (e_t - mean)(e_{t+k} - mean) / sum_t (e_t - mean)^2,
// k = 0..max_lag. Requires N > max_lag >= 1; throws ZeroVariance.
Vector autocorrelation(std::span<const double> e, std::size_t max_lag);

// rho(k) = sum_t (e_t - mean_e)(u_{t+k} - mean_u) / (N sd_e sd_u) for
// k = -max_lag..max_lag (entry max_lag + k), summed over the t where both
// indices are valid. sd is the population standard deviation.
Vector cross_correlation(std::span<const double> e, std::span<const double> u, std::size_t max_lag);

// 99% whiteness band for N samples.
double confidence_band(std::size_t n);

struct Histogram {
  Vector edges;                     // bins + 1 ascending edges
  std::vector<std::size_t> counts;  // the last bin includes its right edge
};

// Sturges rule: ceil(log2 N) + 1 equal-width bins over [min, max].
Histogram histogram(std::span<const double> x);

// ||y - y_hat|| / ||y - mean(y)||. Zero when y_hat == y.
double nrmse(std::span<const double> y, std::span<const double> y_hat);

}  // namespace hoverid
