#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hoverid/dynamics.hpp"
#include "hoverid/lm.hpp"
#include "hoverid/sysid.hpp"

namespace hoverid {

// Single-channel discrete reference dynamics, applied to every tracked
// channel independently.
struct ReferenceModel {
  DiscreteLti sys;
  LtiModel continuous;  // empty for the unit delay
  double natural_frequency = 0.0;
  double damping = 0.0;

  // omega_n^2 / (s^2 + 2 zeta omega_n s + omega_n^2) sampled with ZOH.
  static ReferenceModel second_order(double natural_frequency, double damping, double h);
  // d(t) = r(t - 1).
  static ReferenceModel unit_delay();

  double dc_gain() const;
};

inline constexpr double kDefaultReferenceFrequency = 2.0;
inline constexpr double kDefaultReferenceDamping = 0.9;

// commands[t] holds one value per tracked channel.
std::vector<Vector> reference_step(const ReferenceModel& ref, const std::vector<Vector>& commands);

struct ControllerConfig {
  std::size_t reference_lags = 2;  // r(t), r(t-1)
  std::size_t output_lags = 2;     // y(t), ..., y(t - output_lags + 1)
  std::size_t control_lags = 1;    // u(t-1), ...
  std::vector<std::size_t> hidden = {8};
};

// Controller regressor at time t, raw units:
//   [r(t), ..., r(t - reference_lags + 1),
//    y(t), ..., y(t - output_lags + 1),
//    u(t-1), ..., u(t - control_lags)]
// where r holds the tracked channels, y all plant outputs of the mode and u
// the mode's controls. The network output is scaled by the plant's input
// statistics and saturated into the per-channel deviation limits.
struct Controller {
  ModeSplit mode;
  std::vector<std::string> tracked;
  ControllerConfig cfg;
  Mlp mlp;
  Normalizer reference_norm;
  Normalizer output_norm;
  Normalizer control_norm;
  std::vector<ControlRange> limits;

  std::size_t regressor_length() const;
  std::size_t history() const;
  void validate() const;
};

// Smooth is the deployed output map, a tanh onto each control range. Hard
// clips the raw output instead and is kept for comparison.
enum class Saturation { Smooth, Hard };

// Builds an untrained controller for a plant; weights from mlp_init(seed).
Controller make_controller(const PlantModel& plant, const std::vector<std::string>& tracked,
                           const ControllerConfig& cfg, std::uint64_t seed);

// Stacked tracking residuals e_c = y - d over every rollout, channel-major
// per sample, concatenated in command-set order, and optionally their
// Jacobian with respect to the controller parameters. The Jacobian is the
// exact chain rule through the frozen plant network over time.
struct RolloutResiduals {
  Vector residuals;
  Matrix jacobian;
  std::size_t samples = 0;
  bool diverged = false;
};

RolloutResiduals rollout_residuals(const Controller& controller, const PlantModel& plant, const ReferenceModel& ref,
                                   const std::vector<std::vector<Vector>>& command_set, Saturation saturation,
                                   bool want_jacobian);

struct ControllerTrainingOptions {
  LmOptions lm;
  std::size_t restarts = 3;
  std::uint64_t seed = 1;
  ControllerConfig cfg;
  std::vector<std::string> tracked;  // empty: first output of the mode
};

struct TrainedController {
  Controller controller;
  FitResult fit;
  std::vector<std::uint64_t> seeds;
  std::uint64_t chosen_seed = 0;
};

// Minimizes the stacked tracking residuals of closed-loop rollouts against
// the frozen plant network, using the smooth saturation.
TrainedController train_controller(const PlantModel& plant, const ReferenceModel& ref,
                                   const std::vector<std::vector<Vector>>& command_set, std::size_t horizon,
                                   const ControllerTrainingOptions& opts);

struct TrackingReport {
  std::vector<std::string> channels;
  std::vector<Vector> tracking_error;  // e_c(t) per tracked channel
  Vector rms;
  Vector steady_state_error;  // mean |e_c| over the final 20% of the horizon
  double saturation_fraction = 0.0;  // samples with any control within 1% of span of a limit
  double cost = 0.0;                 // (1/N) sum ||e_c||^2
  std::vector<Vector> model_error;   // e1 = y - y_hat, true-plant runs only
};

struct ClosedLoopResult {
  TrackingReport report;
  Trace trace;  // inputs: mode controls, outputs: mode outputs
  std::vector<Vector> reference;
};

// Loop closed around the plant network (free run).
ClosedLoopResult closed_loop_simulate(const Controller& controller, const PlantModel& plant, const ReferenceModel& ref,
                                      const std::vector<Vector>& commands, Saturation saturation = Saturation::Smooth);

// Loop closed around the linear hover model. The plant network's one-step
// prediction along the trajectory gives e1 in the report.
ClosedLoopResult closed_loop_simulate(const Controller& controller, const LtiModel& plant, double h,
                                      const PlantModel& plant_model, const ReferenceModel& ref,
                                      const std::vector<Vector>& commands, Saturation saturation = Saturation::Smooth);

// Combined cost over a command set, matching the training objective when
// saturation is Smooth.
double tracking_cost(const std::vector<ClosedLoopResult>& runs);

// Step commands of the given magnitudes starting at t = 0.
std::vector<std::vector<Vector>> step_commands(const std::vector<double>& magnitudes, std::size_t horizon,
                                               std::size_t channels = 1);

}  // namespace hoverid
