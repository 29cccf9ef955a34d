#include "hoverid/dynamics.hpp"

#include <cmath>
#include <numbers>

#include "hoverid/linalg.hpp"

namespace hoverid {

ControlRange control_range(std::size_t input_channel) {
  if (input_channel >= input::count) throw Error(ErrorCode::DimensionMismatch, "input channel out of range");
  if (input_channel == input::coll) return {0.0, 1.0};
  return {-1.0, 1.0};
}

double trim_value(std::size_t input_channel) {
  if (input_channel >= input::count) throw Error(ErrorCode::DimensionMismatch, "input channel out of range");
  return input_channel == input::coll ? 0.5 : 0.0;
}

ControlRange deviation_range(std::size_t input_channel) {
  const ControlRange r = control_range(input_channel);
  const double t = trim_value(input_channel);
  return {r.lo - t, r.hi - t};
}

ControlRange deviation_range(std::string_view input_label) {
  for (std::size_t i = 0; i < kInputLabels.size(); ++i) {
    if (kInputLabels[i] == input_label) return deviation_range(i);
  }
  throw Error(ErrorCode::MissingChannel, "unknown input channel '" + std::string(input_label) + "'");
}

void LtiModel::validate() const {
  const std::size_t n = a.rows();
  if (n == 0 || !a.is_square()) throw Error(ErrorCode::DimensionMismatch, "A must be square and non-empty");
  if (b.rows() != n || b.cols() == 0) throw Error(ErrorCode::DimensionMismatch, "B rows must match A");
  if (c.cols() != n || c.rows() == 0) throw Error(ErrorCode::DimensionMismatch, "C cols must match A");
  if (d.rows() != c.rows() || d.cols() != b.cols()) throw Error(ErrorCode::DimensionMismatch, "D shape");
  if (state_labels.size() != n || input_labels.size() != b.cols() || output_labels.size() != c.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "label counts do not match model dimensions");
  }
  if (!a.all_finite() || !b.all_finite() || !c.all_finite() || !d.all_finite()) {
    throw Error(ErrorCode::Overflow, "non-finite model entry");
  }
}

namespace {

std::vector<std::string> default_labels(std::string_view prefix, std::size_t n) {
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::string(prefix) + std::to_string(i));
  return out;
}

}  // namespace

LtiModel make_lti(Matrix a, Matrix b, Matrix c, Matrix d, std::vector<std::string> state_labels,
                  std::vector<std::string> input_labels, std::vector<std::string> output_labels) {
  LtiModel m;
  if (state_labels.empty()) state_labels = default_labels("x", a.rows());
  if (input_labels.empty()) input_labels = default_labels("u", b.cols());
  if (output_labels.empty()) output_labels = default_labels("y", c.rows());
  m.a = std::move(a);
  m.b = std::move(b);
  m.c = std::move(c);
  m.d = std::move(d);
  m.state_labels = std::move(state_labels);
  m.input_labels = std::move(input_labels);
  m.output_labels = std::move(output_labels);
  m.validate();
  return m;
}

LtiModel hover_model() {
  // Row entry (2, phi) = -0.0045036 has no counterpart in the symbolic
  // template; the numeric matrix is kept as published.
  Matrix a = Matrix::from_rows({
      {-0.78501, 0, 0, -9.8, -9.8, 0, 0, 0, 0, 0},
      {0, -0.065145, 0, 0, -56.659, 0, 0, -0.79784, -0.0045036, 1344.1},
      {0.35712, 0, 0, 0, 92.468, -0.063629, 0, 0, 0, 56.515},
      {0, 0, 1, 0, 0, 0, 0, 0, 0, 0},
      {0, 0, -1, 0, -11.842, 0, 0, 0, 0, -7.1176},
      {0, 0, 0, 0, 0, 0.11245, 0, 0, 9.8, 9.8},
      {0.46624, 0, 0, 0, -0.6588, -0.083441, 0, 0, 0, 131.19},
      {0, 1.0349, 0, 0, 0, 0, -9.9435, -0.30115, 0, 0},
      {0, 0, 0, 0, 0, 0, 1, 0, 0, 0},
      {0, 0, 0, 0, 2.1755, 0, -1, 0, 0, -14.687},
  });
  // Columns [coll, long, ped, lat].
  Matrix b = Matrix::from_rows({
      {0, 0, 0, 0},
      {0.71986, 0, 0, 0},
      {1.4468, 0, 0, 0},
      {0, 0, 0, 0},
      {0, -11.198, 0, 4.3523},
      {0, 0, 204.28, 0},
      {0, 0, 0, 0},
      {-3.5204, 0, -7.5159, 0},
      {0, 0, 0, 0},
      {0, 2.9241, 0, 11.712},
  });
  std::vector<std::string> states(kStateLabels.begin(), kStateLabels.end());
  std::vector<std::string> inputs(kInputLabels.begin(), kInputLabels.end());
  return make_lti(std::move(a), std::move(b), Matrix::identity(state::count),
                  Matrix(state::count, input::count), states, inputs, states);
}

Vector derivative(const LtiModel& model, std::span<const double> x, std::span<const double> u) {
  if (x.size() != model.states() || u.size() != model.inputs()) {
    throw Error(ErrorCode::DimensionMismatch, "state or input length does not match model");
  }
  Vector dx = model.a * x;
  const Vector bu = model.b * u;
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += bu[i];
  return dx;
}

DiscreteLti discretize_zoh(const LtiModel& model, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw Error(ErrorCode::BadSpec, "sample period must be positive");
  const std::size_t n = model.states();
  const std::size_t m = model.inputs();
  Matrix aug(n + m, n + m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) aug(i, j) = h * model.a(i, j);
    for (std::size_t j = 0; j < m; ++j) aug(i, n + j) = h * model.b(i, j);
  }
  const Matrix e = expm(aug);
  DiscreteLti out;
  out.ad = Matrix(n, n);
  out.bd = Matrix(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out.ad(i, j) = e(i, j);
    for (std::size_t j = 0; j < m; ++j) out.bd(i, j) = e(i, n + j);
  }
  out.c = model.c;
  out.d = model.d;
  out.step = h;
  return out;
}

Trace simulate(const DiscreteLti& sys, std::span<const double> x0, const std::vector<Vector>& inputs,
               std::size_t n_steps) {
  const std::size_t n = sys.ad.rows();
  const std::size_t m = sys.bd.cols();
  if (n_steps < 1) throw Error(ErrorCode::BadSpec, "n_steps must be at least 1");
  if (x0.size() != n) throw Error(ErrorCode::DimensionMismatch, "initial state length");
  if (inputs.size() != n_steps) throw Error(ErrorCode::DimensionMismatch, "input sample count must equal n_steps");

  Trace tr;
  tr.step = sys.step;
  tr.times.resize(n_steps);
  tr.inputs = inputs;
  tr.states.resize(n_steps);
  tr.outputs.resize(n_steps);

  Vector x(x0.begin(), x0.end());
  Vector next(n);
  for (std::size_t k = 0; k < n_steps; ++k) {
    const Vector& u = inputs[k];
    if (u.size() != m) throw Error(ErrorCode::DimensionMismatch, "input sample length");
    for (double xi : x) {
      if (!std::isfinite(xi)) {
        throw Error(ErrorCode::Overflow, "state became non-finite at step " + std::to_string(k));
      }
    }
    tr.times[k] = static_cast<double>(k) * sys.step;
    tr.states[k] = x;
    Vector y = sys.c * x;
    const Vector du = sys.d * u;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += du[i];
    tr.outputs[k] = std::move(y);

    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += sys.ad(i, j) * x[j];
      for (std::size_t j = 0; j < m; ++j) acc += sys.bd(i, j) * u[j];
      next[i] = acc;
    }
    x.swap(next);
  }
  return tr;
}

Trace simulate(const LtiModel& model, std::span<const double> x0, const std::vector<Vector>& inputs,
               double h, std::size_t n_steps) {
  return simulate(discretize_zoh(model, h), x0, inputs, n_steps);
}

std::vector<ModeRecord> eigen_report(const LtiModel& model) {
  std::vector<ModeRecord> out;
  for (const Complex& lambda : eigenvalues(model.a)) {
    ModeRecord rec;
    rec.eigenvalue = lambda;
    rec.frequency = std::abs(lambda);
    rec.damping = rec.frequency == 0.0 ? 0.0 : -lambda.real() / rec.frequency;
    out.push_back(rec);
  }
  return out;
}

ComplexMatrix transfer_at(const LtiModel& model, Complex s) {
  const std::size_t n = model.states();
  ComplexMatrix lhs(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) lhs(i, j) = -model.a(i, j);
    lhs(i, i) += s;
  }
  const ComplexMatrix x = lu_solve(lhs, to_complex(model.b));
  return to_complex(model.c) * x + to_complex(model.d);
}

void RigidBodyParams::validate() const {
  if (!(mass > 0.0) || !(ixx > 0.0) || !(iyy > 0.0) || !(izz > 0.0)) {
    throw Error(ErrorCode::BadSpec, "mass and inertias must be positive");
  }
}

RigidBodyState rigid_body_derivative(const RigidBodyParams& params, const BodyLoads& loads,
                                     const RigidBodyState& x) {
  params.validate();
  const double u = x[body::u], v = x[body::v], w = x[body::w];
  const double p = x[body::p], q = x[body::q], r = x[body::r];
  const double phi = x[body::phi], theta = x[body::theta];
  if (!(std::abs(theta) < std::numbers::pi / 2.0 - 1e-6)) {
    throw Error(ErrorCode::GimbalProximity, "pitch angle too close to +-90 degrees");
  }
  const double m = params.mass;
  const double g = params.gravity;
  const auto [fx, fy, fz] = loads.force;
  const auto [ml, mm, mn] = loads.moment;
  const double sphi = std::sin(phi), cphi = std::cos(phi);
  const double sth = std::sin(theta), cth = std::cos(theta);

  RigidBodyState dx{};
  dx[body::u] = fx / m + r * v - q * w - g * sth;
  dx[body::v] = fy / m - r * u + p * w + g * sphi * cth;
  dx[body::w] = -fz / m - q * u + p * v - g * cphi * cth;
  dx[body::p] = (ml + (params.iyy - params.izz) * q * r) / params.ixx;
  dx[body::q] = (mm + (params.izz - params.ixx) * p * r) / params.iyy;
  dx[body::r] = (mn + (params.ixx - params.iyy) * p * q) / params.izz;
  dx[body::phi] = p + (q * sphi + r * cphi) * std::tan(theta);
  dx[body::theta] = q * cphi - r * sphi;
  dx[body::psi] = (q * sphi + r * cphi) / cth;
  return dx;
}

RigidBodyState rigid_body_step_rk4(const RigidBodyParams& params, const LoadProvider& loads, double t,
                                   const RigidBodyState& x, double h) {
  auto f = [&](double tt, const RigidBodyState& s) { return rigid_body_derivative(params, loads(tt, s), s); };
  auto axpy = [](const RigidBodyState& base, const RigidBodyState& d, double a) {
    RigidBodyState out;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = base[i] + a * d[i];
    return out;
  };
  const RigidBodyState k1 = f(t, x);
  const RigidBodyState k2 = f(t + 0.5 * h, axpy(x, k1, 0.5 * h));
  const RigidBodyState k3 = f(t + 0.5 * h, axpy(x, k2, 0.5 * h));
  const RigidBodyState k4 = f(t + h, axpy(x, k3, h));
  RigidBodyState out;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return out;
}

}  // namespace hoverid
