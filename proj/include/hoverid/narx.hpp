#pragma once

#include <span>
#include <vector>

#include "hoverid/matrix.hpp"
#include "hoverid/nn.hpp"

namespace hoverid {

// Lag structure of the regressor
//   phi(t) = [y(t-1), ..., y(t-na), u(t-nk), ..., u(t-nk-nb+1)]
// where each y(.) and u(.) entry expands to all of its channels in order.
struct NarxConfig {
  std::size_t na = 2;
  std::size_t nb = 2;
  std::size_t nk = 1;
  std::size_t n_outputs = 1;
  std::size_t n_inputs = 1;

  std::size_t regressor_length() const { return na * n_outputs + nb * n_inputs; }
  // Smallest t for which phi(t) is defined.
  std::size_t max_lag() const;
  void validate() const;

  friend bool operator==(const NarxConfig&, const NarxConfig&) = default;
};

Vector build_regressor(const std::vector<Vector>& y_history, const std::vector<Vector>& u_history,
                       std::size_t t, const NarxConfig& cfg);

// Per-channel z-score statistics.
struct Normalizer {
  static constexpr double kStdFloor = 1e-12;

  Vector mean;
  Vector std;

  static Normalizer identity(std::size_t channels);
  // Statistics over samples[begin, end).
  static Normalizer fit(const std::vector<Vector>& samples, std::size_t begin, std::size_t end);

  std::size_t channels() const { return mean.size(); }
  Vector normalize(std::span<const double> x) const;
  Vector denormalize(std::span<const double> z) const;

  friend bool operator==(const Normalizer&, const Normalizer&) = default;
};

// Network plus lag structure and the output/input scaling it was trained in.
// The network maps the normalized regressor to the normalized y(t).
struct NarxModel {
  Mlp mlp;
  NarxConfig cfg;
  Normalizer y_norm;
  Normalizer u_norm;

  void validate() const;

  Vector normalize_regressor(std::span<const double> phi) const;
  // Raw-unit prediction for a raw-unit regressor.
  Vector predict(std::span<const double> phi) const;

  struct Linearization {
    Vector y;
    Matrix d_regressor;  // dy/dphi in raw units
    Matrix d_params;     // dy/dtheta in raw output units
  };
  Linearization linearize(std::span<const double> phi, bool want_params, bool want_regressor) const;
};

// Series-parallel prediction of y(t) from measured past outputs.
Vector narx_one_step(const NarxModel& model, const std::vector<Vector>& y_history,
                     const std::vector<Vector>& u_history, std::size_t t);

// Parallel (simulation) prediction: the first max_lag samples are copied from
// initial_history, later samples feed predictions back into the regressor.
// Throws Overflow if any |y| exceeds 1e9.
std::vector<Vector> narx_free_run(const NarxModel& model, const std::vector<Vector>& u_sequence,
                                  const std::vector<Vector>& initial_history);

inline constexpr double kDivergenceLimit = 1e9;

}  // namespace hoverid
