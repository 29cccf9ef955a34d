#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hoverid/matrix.hpp"

namespace hoverid {

// Hover state ordering [u, w, q, theta, a1s, v, p, r, phi, b1s].
namespace state {
enum Index : std::size_t { u, w, q, theta, a1s, v, p, r, phi, b1s, count };
}

// Canonical control ordering [coll, long, ped, lat]. This is the column
// order of the numeric hover input matrix; the symbolic input vector lists
// the channels as [long, coll, lat, ped].
namespace input {
enum Index : std::size_t { coll, lon, ped, lat, count };
}

inline constexpr std::array<std::string_view, state::count> kStateLabels = {
    "u", "w", "q", "theta", "a1s", "v", "p", "r", "phi", "b1s"};
inline constexpr std::array<std::string_view, input::count> kInputLabels = {
    "dcoll", "dlong", "dped", "dlat"};

struct ControlRange {
  double lo = -1.0;
  double hi = 1.0;

  double clamp(double x) const { return x < lo ? lo : (x > hi ? hi : x); }
  bool contains(double x, double slack = 0.0) const { return x >= lo - slack && x <= hi + slack; }
};

// Absolute stick ranges: collective in [0, 1], cyclics and pedal in [-1, 1].
ControlRange control_range(std::size_t input_channel);
// Absolute stick position at the hover trim point. The linear model acts on
// deviations from this point.
double trim_value(std::size_t input_channel);
// Admissible deviation from trim, i.e. control_range shifted by trim_value.
ControlRange deviation_range(std::size_t input_channel);
// Deviation range looked up by input label ("dcoll", ...).
ControlRange deviation_range(std::string_view input_label);

struct LtiModel {
  Matrix a;
  Matrix b;
  Matrix c;
  Matrix d;
  std::vector<std::string> state_labels;
  std::vector<std::string> input_labels;
  std::vector<std::string> output_labels;

  std::size_t states() const noexcept { return a.rows(); }
  std::size_t inputs() const noexcept { return b.cols(); }
  std::size_t outputs() const noexcept { return c.rows(); }

  // Throws DimensionMismatch on inconsistent shapes or label counts.
  void validate() const;
};

// Builds and validates a model. Empty label lists get generated names.
LtiModel make_lti(Matrix a, Matrix b, Matrix c, Matrix d,
                  std::vector<std::string> state_labels = {},
                  std::vector<std::string> input_labels = {},
                  std::vector<std::string> output_labels = {});

// Linearized hover model: 10 states, 4 inputs, full-state output.
LtiModel hover_model();

Vector derivative(const LtiModel& model, std::span<const double> x, std::span<const double> u);

struct DiscreteLti {
  Matrix ad;
  Matrix bd;
  Matrix c;
  Matrix d;
  double step = 0.0;
};

// Zero-order-hold sampling: [Ad Bd; 0 I] = expm(h [A B; 0 0]).
DiscreteLti discretize_zoh(const LtiModel& model, double h);

inline constexpr double kDefaultStep = 0.02;

struct Trace {
  double step = 0.0;
  Vector times;
  std::vector<Vector> inputs;
  std::vector<Vector> states;
  std::vector<Vector> outputs;

  std::size_t size() const noexcept { return times.size(); }
};

// Samples k = 0..n_steps-1 with x_0 = x0, x_{k+1} = Ad x_k + Bd u_k and
// y_k = C x_k + D u_k. inputs must hold n_steps samples.
Trace simulate(const LtiModel& model, std::span<const double> x0,
               const std::vector<Vector>& inputs, double h, std::size_t n_steps);
Trace simulate(const DiscreteLti& sys, std::span<const double> x0,
               const std::vector<Vector>& inputs, std::size_t n_steps);

struct ModeRecord {
  Complex eigenvalue;
  double damping = 0.0;
  double frequency = 0.0;
};

std::vector<ModeRecord> eigen_report(const LtiModel& model);

// G(s) = C (sI - A)^-1 B + D via a complex LU solve.
ComplexMatrix transfer_at(const LtiModel& model, Complex s);

struct RigidBodyParams {
  double mass = 1.0;
  double ixx = 1.0;
  double iyy = 1.0;
  double izz = 1.0;
  double gravity = 9.8;

  void validate() const;
};

// Nonlinear rigid-body state (u, v, w, p, q, r, phi, theta, psi).
using RigidBodyState = std::array<double, 9>;

namespace body {
enum Index : std::size_t { u, v, w, p, q, r, phi, theta, psi };
}

struct BodyLoads {
  std::array<double, 3> force{};   // X, Y, Z [N]
  std::array<double, 3> moment{};  // L, M, N [N m]
};

// Body-axis translational and rotational equations solved for the state
// rates, with the sign conventions of the source model (the vertical
// equation reads w' = -Z/m - g cos(phi) cos(theta) - q u + p v).
// Throws GimbalProximity when |theta| >= pi/2 - 1e-6.
RigidBodyState rigid_body_derivative(const RigidBodyParams& params, const BodyLoads& loads,
                                     const RigidBodyState& x);

// Caller-supplied force and moment model.
using LoadProvider = std::function<BodyLoads(double t, const RigidBodyState& x)>;

RigidBodyState rigid_body_step_rk4(const RigidBodyParams& params, const LoadProvider& loads,
                                   double t, const RigidBodyState& x, double h);

}  // namespace hoverid
