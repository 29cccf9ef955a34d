#include "hoverid/narx.hpp"

#include <algorithm>
#include <cmath>

namespace hoverid {

std::size_t NarxConfig::max_lag() const { return std::max(na, nk + nb - 1); }

void NarxConfig::validate() const {
  if (nb < 1) throw Error(ErrorCode::BadShape, "nb must be at least 1");
  if (n_outputs < 1 || n_inputs < 1) throw Error(ErrorCode::BadShape, "channel counts must be positive");
}

Vector build_regressor(const std::vector<Vector>& y_history, const std::vector<Vector>& u_history, std::size_t t,
                       const NarxConfig& cfg) {
  cfg.validate();
  if (t < cfg.max_lag()) {
    throw Error(ErrorCode::InsufficientHistory, "t=" + std::to_string(t) + " is below the maximum lag");
  }
  if ((cfg.na > 0 && y_history.size() < t) || u_history.size() + cfg.nk <= t) {
    throw Error(ErrorCode::InsufficientHistory, "history shorter than the requested time index");
  }
  Vector phi;
  phi.reserve(cfg.regressor_length());
  for (std::size_t lag = 1; lag <= cfg.na; ++lag) {
    const Vector& y = y_history[t - lag];
    if (y.size() != cfg.n_outputs) throw Error(ErrorCode::BadShape, "output sample length");
    phi.insert(phi.end(), y.begin(), y.end());
  }
  for (std::size_t j = 0; j < cfg.nb; ++j) {
    const Vector& u = u_history[t - cfg.nk - j];
    if (u.size() != cfg.n_inputs) throw Error(ErrorCode::BadShape, "input sample length");
    phi.insert(phi.end(), u.begin(), u.end());
  }
  return phi;
}

Normalizer Normalizer::identity(std::size_t channels) {
  return {Vector(channels, 0.0), Vector(channels, 1.0)};
}

Normalizer Normalizer::fit(const std::vector<Vector>& samples, std::size_t begin, std::size_t end) {
  if (end <= begin || end > samples.size()) throw Error(ErrorCode::EmptySequence, "normalizer needs samples");
  const std::size_t c = samples[begin].size();
  Normalizer n{Vector(c, 0.0), Vector(c, 0.0)};
  const double count = static_cast<double>(end - begin);
  for (std::size_t k = begin; k < end; ++k)
    for (std::size_t i = 0; i < c; ++i) n.mean[i] += samples[k][i];
  for (double& m : n.mean) m /= count;
  for (std::size_t k = begin; k < end; ++k)
    for (std::size_t i = 0; i < c; ++i) n.std[i] += (samples[k][i] - n.mean[i]) * (samples[k][i] - n.mean[i]);
  for (double& s : n.std) s = std::max(std::sqrt(s / count), kStdFloor);
  return n;
}

Vector Normalizer::normalize(std::span<const double> x) const {
  if (x.size() != mean.size()) throw Error(ErrorCode::BadShape, "normalizer channel count");
  Vector z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - mean[i]) / std[i];
  return z;
}

Vector Normalizer::denormalize(std::span<const double> z) const {
  if (z.size() != mean.size()) throw Error(ErrorCode::BadShape, "normalizer channel count");
  Vector x(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) x[i] = z[i] * std[i] + mean[i];
  return x;
}

void NarxModel::validate() const {
  cfg.validate();
  mlp.validate();
  if (mlp.input_size() != cfg.regressor_length() || mlp.output_size() != cfg.n_outputs) {
    throw Error(ErrorCode::BadShape, "network size does not match the regressor structure");
  }
  if (y_norm.channels() != cfg.n_outputs || u_norm.channels() != cfg.n_inputs) {
    throw Error(ErrorCode::BadShape, "normalizer channel counts do not match the regressor structure");
  }
}

namespace {

// Scale of regressor entry k.
double regressor_scale(const NarxModel& m, std::size_t k, double& mean) {
  const std::size_t ny = m.cfg.na * m.cfg.n_outputs;
  if (k < ny) {
    const std::size_t c = k % m.cfg.n_outputs;
    mean = m.y_norm.mean[c];
    return m.y_norm.std[c];
  }
  const std::size_t c = (k - ny) % m.cfg.n_inputs;
  mean = m.u_norm.mean[c];
  return m.u_norm.std[c];
}

}  // namespace

Vector NarxModel::normalize_regressor(std::span<const double> phi) const {
  if (phi.size() != cfg.regressor_length()) throw Error(ErrorCode::BadShape, "regressor length");
  Vector z(phi.size());
  for (std::size_t k = 0; k < phi.size(); ++k) {
    double mean = 0.0;
    const double s = regressor_scale(*this, k, mean);
    z[k] = (phi[k] - mean) / s;
  }
  return z;
}

Vector NarxModel::predict(std::span<const double> phi) const {
  return y_norm.denormalize(forward(mlp, normalize_regressor(phi)));
}

NarxModel::Linearization NarxModel::linearize(std::span<const double> phi, bool want_params,
                                              bool want_regressor) const {
  const Vector z = normalize_regressor(phi);
  MlpEvaluation ev = evaluate(mlp, z, want_params, want_regressor);
  Linearization out;
  out.y = y_norm.denormalize(ev.y);
  const std::size_t ny = cfg.n_outputs;
  if (want_params) {
    out.d_params = std::move(ev.d_params);
    for (std::size_t o = 0; o < ny; ++o)
      for (double& v : out.d_params.row(o)) v *= y_norm.std[o];
  }
  if (want_regressor) {
    out.d_regressor = std::move(ev.d_input);
    for (std::size_t k = 0; k < phi.size(); ++k) {
      double mean = 0.0;
      const double s = regressor_scale(*this, k, mean);
      for (std::size_t o = 0; o < ny; ++o) out.d_regressor(o, k) *= y_norm.std[o] / s;
    }
  }
  return out;
}

Vector narx_one_step(const NarxModel& model, const std::vector<Vector>& y_history,
                     const std::vector<Vector>& u_history, std::size_t t) {
  return model.predict(build_regressor(y_history, u_history, t, model.cfg));
}

std::vector<Vector> narx_free_run(const NarxModel& model, const std::vector<Vector>& u_sequence,
                                  const std::vector<Vector>& initial_history) {
  const std::size_t p = model.cfg.max_lag();
  if (initial_history.size() < p) {
    throw Error(ErrorCode::InsufficientHistory, "free run needs max_lag initial output samples");
  }
  std::vector<Vector> y;
  y.reserve(u_sequence.size());
  for (std::size_t t = 0; t < u_sequence.size(); ++t) {
    if (t < p) {
      y.push_back(initial_history[t]);
      continue;
    }
    Vector yt = model.predict(build_regressor(y, u_sequence, t, model.cfg));
    for (double v : yt) {
      if (!std::isfinite(v) || std::abs(v) > kDivergenceLimit) {
        throw Error(ErrorCode::Overflow, "free-run prediction diverged at t=" + std::to_string(t));
      }
    }
    y.push_back(std::move(yt));
  }
  return y;
}

}  // namespace hoverid
