#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hoverid/matrix.hpp"

namespace hoverid {

// Feedforward network: tanh hidden layers, identity output layer.
//
// Parameter vector layout (flatten/unflatten and the columns of
// jacobian_params): for each layer in order, the weight matrix row-major
// followed by the bias vector.
struct Mlp {
  std::vector<std::size_t> layer_sizes;
  std::vector<Matrix> weights;  // weights[l] is layer_sizes[l+1] x layer_sizes[l]
  std::vector<Vector> biases;

  std::size_t input_size() const { return layer_sizes.front(); }
  std::size_t output_size() const { return layer_sizes.back(); }
  std::size_t layer_count() const { return weights.size(); }
  std::size_t parameter_count() const;

  // Throws BadShape on inconsistent dimensions, Overflow on non-finite values.
  void validate() const;

  friend bool operator==(const Mlp&, const Mlp&) = default;
};

// Weights uniform in +-1/sqrt(fan_in), biases zero.
Mlp mlp_init(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed);
// All-zero parameters with the given shape.
Mlp mlp_zeros(const std::vector<std::size_t>& layer_sizes);

Vector flatten(const Mlp& mlp);
void unflatten(Mlp& mlp, std::span<const double> theta);

Vector forward(const Mlp& mlp, std::span<const double> x);

struct MlpEvaluation {
  Vector y;
  Matrix d_params;  // output_size x parameter_count
  Matrix d_input;   // output_size x input_size
};

// Forward pass with reverse-mode derivatives. The derivative matrices are
// only filled when requested.
MlpEvaluation evaluate(const Mlp& mlp, std::span<const double> x, bool want_params, bool want_input);

Matrix jacobian_params(const Mlp& mlp, std::span<const double> x);
Matrix jacobian_input(const Mlp& mlp, std::span<const double> x);

}  // namespace hoverid
