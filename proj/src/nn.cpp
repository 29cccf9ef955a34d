#include "hoverid/nn.hpp"

#include <cmath>

#include "hoverid/random.hpp"

namespace hoverid {

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

void Mlp::validate() const {
  if (layer_sizes.size() < 2) throw Error(ErrorCode::BadShape, "network needs at least input and output layers");
  for (std::size_t s : layer_sizes) {
    if (s == 0) throw Error(ErrorCode::BadShape, "layer sizes must be positive");
  }
  if (weights.size() != layer_sizes.size() - 1 || biases.size() != weights.size()) {
    throw Error(ErrorCode::BadShape, "layer count does not match weights");
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != layer_sizes[l + 1] || weights[l].cols() != layer_sizes[l] ||
        biases[l].size() != layer_sizes[l + 1]) {
      throw Error(ErrorCode::BadShape, "weight dimensions do not match layer sizes at layer " + std::to_string(l));
    }
    if (!weights[l].all_finite()) throw Error(ErrorCode::Overflow, "non-finite weight");
    for (double b : biases[l]) {
      if (!std::isfinite(b)) throw Error(ErrorCode::Overflow, "non-finite bias");
    }
  }
}

Mlp mlp_zeros(const std::vector<std::size_t>& layer_sizes) {
  Mlp m;
  m.layer_sizes = layer_sizes;
  if (layer_sizes.size() < 2) throw Error(ErrorCode::BadShape, "network needs at least input and output layers");
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    if (layer_sizes[l] == 0 || layer_sizes[l + 1] == 0) throw Error(ErrorCode::BadShape, "layer sizes must be positive");
    m.weights.emplace_back(layer_sizes[l + 1], layer_sizes[l]);
    m.biases.emplace_back(layer_sizes[l + 1], 0.0);
  }
  return m;
}

Mlp mlp_init(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed) {
  Mlp m = mlp_zeros(layer_sizes);
  Rng rng(seed);
  for (auto& w : m.weights) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    for (double& v : w.storage()) v = rng.uniform(-bound, bound);
  }
  return m;
}

Vector flatten(const Mlp& mlp) {
  Vector theta;
  theta.reserve(mlp.parameter_count());
  for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
    theta.insert(theta.end(), mlp.weights[l].storage().begin(), mlp.weights[l].storage().end());
    theta.insert(theta.end(), mlp.biases[l].begin(), mlp.biases[l].end());
  }
  return theta;
}

void unflatten(Mlp& mlp, std::span<const double> theta) {
  if (theta.size() != mlp.parameter_count()) throw Error(ErrorCode::BadShape, "parameter vector length");
  std::size_t k = 0;
  for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
    for (double& v : mlp.weights[l].storage()) v = theta[k++];
    for (double& v : mlp.biases[l]) v = theta[k++];
  }
}

namespace {

void check_input(const Mlp& mlp, std::span<const double> x) {
  if (mlp.layer_sizes.size() < 2 || x.size() != mlp.input_size()) {
    throw Error(ErrorCode::BadShape, "input length does not match network");
  }
}

// activations[0] = x, activations[l+1] = layer l output.
std::vector<Vector> forward_activations(const Mlp& mlp, std::span<const double> x) {
  std::vector<Vector> act;
  act.reserve(mlp.weights.size() + 1);
  act.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
    const Matrix& w = mlp.weights[l];
    const Vector& in = act.back();
    Vector z(w.rows());
    for (std::size_t i = 0; i < w.rows(); ++i) {
      double acc = mlp.biases[l][i];
      const auto row = w.row(i);
      for (std::size_t j = 0; j < w.cols(); ++j) acc += row[j] * in[j];
      z[i] = acc;
    }
    if (l + 1 < mlp.weights.size()) {
      for (double& v : z) v = std::tanh(v);
    }
    act.push_back(std::move(z));
  }
  return act;
}

}  // namespace

Vector forward(const Mlp& mlp, std::span<const double> x) {
  check_input(mlp, x);
  return forward_activations(mlp, x).back();
}

MlpEvaluation evaluate(const Mlp& mlp, std::span<const double> x, bool want_params, bool want_input) {
  check_input(mlp, x);
  std::vector<Vector> act = forward_activations(mlp, x);
  MlpEvaluation out;
  out.y = act.back();
  if (!want_params && !want_input) return out;

  const std::size_t n_out = mlp.output_size();
  const std::size_t n_layers = mlp.weights.size();
  if (want_params) out.d_params = Matrix(n_out, mlp.parameter_count());

  // Column offset of each layer's block in the parameter vector.
  std::vector<std::size_t> offset(n_layers);
  std::size_t k = 0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    offset[l] = k;
    k += mlp.weights[l].size() + mlp.biases[l].size();
  }

  // g = dy / d(pre-activation of the current layer); identity at the output.
  Matrix g = Matrix::identity(n_out);
  for (std::size_t l = n_layers; l-- > 0;) {
    const Matrix& w = mlp.weights[l];
    const Vector& in = act[l];
    if (want_params) {
      const std::size_t bias_col = offset[l] + w.size();
      for (std::size_t o = 0; o < n_out; ++o) {
        auto row = out.d_params.row(o);
        for (std::size_t i = 0; i < w.rows(); ++i) {
          const double gi = g(o, i);
          double* dst = row.data() + offset[l] + i * w.cols();
          for (std::size_t j = 0; j < w.cols(); ++j) dst[j] = gi * in[j];
          row[bias_col + i] = gi;
        }
      }
    }
    if (l == 0 && !want_input) break;
    // g <- g W, then through the tanh of the layer below (if any).
    Matrix next(n_out, w.cols());
    for (std::size_t o = 0; o < n_out; ++o) {
      for (std::size_t i = 0; i < w.rows(); ++i) {
        const double gi = g(o, i);
        if (gi == 0.0) continue;
        const auto wrow = w.row(i);
        for (std::size_t j = 0; j < w.cols(); ++j) next(o, j) += gi * wrow[j];
      }
    }
    if (l == 0) {
      out.d_input = std::move(next);
      break;
    }
    for (std::size_t o = 0; o < n_out; ++o) {
      for (std::size_t j = 0; j < w.cols(); ++j) next(o, j) *= 1.0 - in[j] * in[j];
    }
    g = std::move(next);
  }
  return out;
}

Matrix jacobian_params(const Mlp& mlp, std::span<const double> x) {
  return evaluate(mlp, x, true, false).d_params;
}

Matrix jacobian_input(const Mlp& mlp, std::span<const double> x) {
  return evaluate(mlp, x, false, true).d_input;
}

}  // namespace hoverid
