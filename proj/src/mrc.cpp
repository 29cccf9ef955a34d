#include "hoverid/mrc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hoverid/kernels.hpp"
#include "hoverid/linalg.hpp"

namespace hoverid {

ReferenceModel ReferenceModel::second_order(double natural_frequency, double damping, double h) {
  if (!(natural_frequency > 0.0) || !(damping > 0.0)) {
    throw Error(ErrorCode::BadSpec, "reference model needs positive natural frequency and damping");
  }
  const double w2 = natural_frequency * natural_frequency;
  ReferenceModel ref;
  ref.natural_frequency = natural_frequency;
  ref.damping = damping;
  ref.continuous = make_lti(Matrix::from_rows({{0.0, 1.0}, {-w2, -2.0 * damping * natural_frequency}}),
                            Matrix::from_rows({{0.0}, {w2}}), Matrix::from_rows({{1.0, 0.0}}), Matrix(1, 1),
                            {"d", "d_rate"}, {"r"}, {"d"});
  ref.sys = discretize_zoh(ref.continuous, h);
  return ref;
}

ReferenceModel ReferenceModel::unit_delay() {
  ReferenceModel ref;
  ref.sys.ad = Matrix(1, 1, 0.0);
  ref.sys.bd = Matrix(1, 1, 1.0);
  ref.sys.c = Matrix(1, 1, 1.0);
  ref.sys.d = Matrix(1, 1, 0.0);
  ref.sys.step = 1.0;
  return ref;
}

double ReferenceModel::dc_gain() const {
  const std::size_t n = sys.ad.rows();
  const Matrix x = lu_solve(Matrix::identity(n) - sys.ad, sys.bd);
  return (sys.c * x)(0, 0) + sys.d(0, 0);
}

std::vector<Vector> reference_step(const ReferenceModel& ref, const std::vector<Vector>& commands) {
  if (commands.empty()) return {};
  const std::size_t channels = commands.front().size();
  const std::size_t n = ref.sys.ad.rows();
  std::vector<Vector> d(commands.size(), Vector(channels, 0.0));
  for (std::size_t ch = 0; ch < channels; ++ch) {
    Vector x(n, 0.0);
    Vector next(n);
    for (std::size_t t = 0; t < commands.size(); ++t) {
      if (commands[t].size() != channels) throw Error(ErrorCode::DimensionMismatch, "command sample length");
      const double r = commands[t][ch];
      if (!std::isfinite(r)) throw Error(ErrorCode::BadSpec, "non-finite command");
      double y = ref.sys.d(0, 0) * r;
      for (std::size_t j = 0; j < n; ++j) y += ref.sys.c(0, j) * x[j];
      d[t][ch] = y;
      for (std::size_t i = 0; i < n; ++i) {
        double acc = ref.sys.bd(i, 0) * r;
        for (std::size_t j = 0; j < n; ++j) acc += ref.sys.ad(i, j) * x[j];
        next[i] = acc;
      }
      x.swap(next);
    }
  }
  return d;
}

std::size_t Controller::regressor_length() const {
  return cfg.reference_lags * tracked.size() + cfg.output_lags * mode.outputs.size() +
         cfg.control_lags * mode.inputs.size();
}

std::size_t Controller::history() const {
  return std::max({cfg.reference_lags, cfg.output_lags, cfg.control_lags + 1});
}

void Controller::validate() const {
  mlp.validate();
  if (tracked.empty()) throw Error(ErrorCode::BadShape, "controller tracks no channel");
  if (cfg.reference_lags < 1 || cfg.output_lags < 1) throw Error(ErrorCode::BadShape, "controller lags");
  if (mlp.input_size() != regressor_length() || mlp.output_size() != mode.inputs.size()) {
    throw Error(ErrorCode::BadShape, "controller network does not match its regressor");
  }
  if (limits.size() != mode.inputs.size() || reference_norm.channels() != tracked.size() ||
      output_norm.channels() != mode.outputs.size() || control_norm.channels() != mode.inputs.size()) {
    throw Error(ErrorCode::BadShape, "controller scaling does not match its channels");
  }
}

namespace {

std::vector<std::size_t> tracked_indices(const Controller& c) {
  std::vector<std::size_t> idx;
  for (const auto& name : c.tracked) {
    const auto it = std::find(c.mode.outputs.begin(), c.mode.outputs.end(), name);
    if (it == c.mode.outputs.end()) throw Error(ErrorCode::MissingChannel, "tracked channel '" + name + "' not in mode");
    idx.push_back(static_cast<std::size_t>(it - c.mode.outputs.begin()));
  }
  return idx;
}

ControlRange limits_for(const std::string& label) {
  if (std::find(kInputLabels.begin(), kInputLabels.end(), label) != kInputLabels.end()) return deviation_range(label);
  return {-1.0, 1.0};
}

// A control within this fraction of its span from a limit counts as saturated.
constexpr double kLimitBand = 0.01;

struct SaturatedValue {
  double value;
  double slope;
};

SaturatedValue saturate(const ControlRange& r, double raw, Saturation mode) {
  if (mode == Saturation::Hard) {
    if (raw <= r.lo) return {r.lo, 0.0};
    if (raw >= r.hi) return {r.hi, 0.0};
    return {raw, 1.0};
  }
  const double c = 0.5 * (r.lo + r.hi);
  const double s = 0.5 * (r.hi - r.lo);
  const double t = std::tanh((raw - c) / s);
  return {c + s * t, 1.0 - t * t};
}

// out += d[:, col0 : col0 + s.rows()] * s
void accumulate(Matrix& out, const Matrix& d, std::size_t col0, const Matrix& s) {
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto orow = out.row(i);
    for (std::size_t k = 0; k < s.rows(); ++k) {
      const double f = d(i, col0 + k);
      if (f == 0.0) continue;
      const auto srow = s.row(k);
      for (std::size_t j = 0; j < orow.size(); ++j) orow[j] += f * srow[j];
    }
  }
}

// Raw controller regressor at array index k (time t = k - pre).
Vector controller_regressor(const Controller& c, const std::vector<Vector>& commands, std::size_t t,
                            const std::vector<Vector>& y, const std::vector<Vector>& u, std::size_t k) {
  Vector phi;
  phi.reserve(c.regressor_length());
  const std::size_t nt = c.tracked.size();
  for (std::size_t j = 0; j < c.cfg.reference_lags; ++j) {
    if (t >= j) {
      phi.insert(phi.end(), commands[t - j].begin(), commands[t - j].end());
    } else {
      phi.insert(phi.end(), nt, 0.0);
    }
  }
  for (std::size_t j = 0; j < c.cfg.output_lags; ++j) phi.insert(phi.end(), y[k - j].begin(), y[k - j].end());
  for (std::size_t j = 1; j <= c.cfg.control_lags; ++j) phi.insert(phi.end(), u[k - j].begin(), u[k - j].end());
  return phi;
}

Vector regressor_scale(const Controller& c, const Vector& phi, Vector& z) {
  Vector scale(phi.size());
  z.resize(phi.size());
  std::size_t k = 0;
  auto block = [&](const Normalizer& nrm, std::size_t lags) {
    for (std::size_t j = 0; j < lags; ++j) {
      for (std::size_t i = 0; i < nrm.channels(); ++i, ++k) {
        scale[k] = nrm.std[i];
        z[k] = (phi[k] - nrm.mean[i]) / nrm.std[i];
      }
    }
  };
  block(c.reference_norm, c.cfg.reference_lags);
  block(c.output_norm, c.cfg.output_lags);
  block(c.control_norm, c.cfg.control_lags);
  return scale;
}

struct LoopRun {
  std::vector<Vector> y;  // array index k = pre + t
  std::vector<Vector> u;
  std::vector<Vector> d;
  Vector residuals;  // t-major, tracked channels inner
  Matrix jacobian;
  std::size_t saturated = 0;
  std::size_t pre = 0;
  bool diverged = false;
};

LoopRun run_nn_loop(const Controller& c, const PlantModel& plant, const ReferenceModel& ref,
                    const std::vector<Vector>& commands, Saturation sat, bool want_jac) {
  const std::size_t horizon = commands.size();
  const std::size_t ny = c.mode.outputs.size();
  const std::size_t nu = c.mode.inputs.size();
  const std::vector<std::size_t> tr = tracked_indices(c);
  const std::size_t nt = tr.size();
  const std::size_t np = want_jac ? c.mlp.parameter_count() : 0;
  const NarxConfig& pc = plant.narx.cfg;
  if (pc.nk < 1) throw Error(ErrorCode::BadShape, "closed loop needs a plant input delay of at least one sample");

  LoopRun run;
  run.pre = std::max(pc.max_lag(), c.history());
  run.d = reference_step(ref, commands);
  const std::size_t total = run.pre + horizon;
  run.y.assign(total, Vector(ny, 0.0));
  run.u.assign(total, Vector(nu, 0.0));
  run.residuals.assign(horizon * nt, 0.0);
  std::vector<Matrix> sy;
  std::vector<Matrix> su;
  if (want_jac) {
    sy.assign(total, Matrix(ny, np));
    su.assign(total, Matrix(nu, np));
    run.jacobian = Matrix(horizon * nt, np);
  }

  const std::size_t ny_block = pc.na * pc.n_outputs;
  for (std::size_t t = 0; t < horizon; ++t) {
    const std::size_t k = run.pre + t;

    // Plant network, free run.
    const Vector phi_p = build_regressor(run.y, run.u, k, pc);
    NarxModel::Linearization lp = plant.narx.linearize(phi_p, false, want_jac);
    for (double v : lp.y) {
      if (!std::isfinite(v) || std::abs(v) > kDivergenceLimit) {
        run.diverged = true;
        return run;
      }
    }
    run.y[k] = lp.y;
    if (want_jac) {
      Matrix& s = sy[k];
      for (std::size_t lag = 1; lag <= pc.na; ++lag) accumulate(s, lp.d_regressor, (lag - 1) * ny, sy[k - lag]);
      for (std::size_t j = 0; j < pc.nb; ++j) accumulate(s, lp.d_regressor, ny_block + j * nu, su[k - pc.nk - j]);
    }

    // Controller.
    const Vector phi_c = controller_regressor(c, commands, t, run.y, run.u, k);
    Vector z;
    const Vector scale = regressor_scale(c, phi_c, z);
    const MlpEvaluation ev = evaluate(c.mlp, z, want_jac, want_jac);
    Matrix draw;
    if (want_jac) {
      draw = ev.d_params;
      Matrix din = ev.d_input;
      for (std::size_t o = 0; o < nu; ++o)
        for (std::size_t j = 0; j < din.cols(); ++j) din(o, j) /= scale[j];
      std::size_t col = c.cfg.reference_lags * nt;
      for (std::size_t j = 0; j < c.cfg.output_lags; ++j, col += ny) accumulate(draw, din, col, sy[k - j]);
      for (std::size_t j = 1; j <= c.cfg.control_lags; ++j, col += nu) accumulate(draw, din, col, su[k - j]);
    }
    bool at_limit = false;
    for (std::size_t o = 0; o < nu; ++o) {
      const double raw = c.control_norm.mean[o] + c.control_norm.std[o] * ev.y[o];
      const SaturatedValue sv = saturate(c.limits[o], raw, sat);
      run.u[k][o] = sv.value;
      const double span = c.limits[o].hi - c.limits[o].lo;
      if (sv.value <= c.limits[o].lo + kLimitBand * span || sv.value >= c.limits[o].hi - kLimitBand * span) at_limit = true;
      if (want_jac) {
        const double f = sv.slope * c.control_norm.std[o];
        auto dst = su[k].row(o);
        const auto src = draw.row(o);
        for (std::size_t j = 0; j < np; ++j) dst[j] = f * src[j];
      }
    }
    if (at_limit) ++run.saturated;

    for (std::size_t i = 0; i < nt; ++i) {
      run.residuals[t * nt + i] = run.y[k][tr[i]] - run.d[t][i];
      if (want_jac) {
        const auto src = sy[k].row(tr[i]);
        std::copy(src.begin(), src.end(), run.jacobian.row(t * nt + i).begin());
      }
    }
  }
  return run;
}

TrackingReport make_report(const Controller& c, const Vector& residuals, std::size_t horizon,
                           std::size_t saturated) {
  const std::size_t nt = c.tracked.size();
  TrackingReport rep;
  rep.channels = c.tracked;
  rep.tracking_error.assign(horizon, Vector(nt, 0.0));
  rep.rms.assign(nt, 0.0);
  rep.steady_state_error.assign(nt, 0.0);
  const std::size_t tail_begin = horizon - std::max<std::size_t>(1, horizon / 5);
  double sq = 0.0;
  for (std::size_t t = 0; t < horizon; ++t) {
    for (std::size_t i = 0; i < nt; ++i) {
      const double e = residuals[t * nt + i];
      rep.tracking_error[t][i] = e;
      rep.rms[i] += e * e;
      sq += e * e;
      if (t >= tail_begin) rep.steady_state_error[i] += std::abs(e);
    }
  }
  for (std::size_t i = 0; i < nt; ++i) {
    rep.rms[i] = std::sqrt(rep.rms[i] / static_cast<double>(horizon));
    rep.steady_state_error[i] /= static_cast<double>(horizon - tail_begin);
  }
  rep.cost = sq / static_cast<double>(horizon);
  rep.saturation_fraction = static_cast<double>(saturated) / static_cast<double>(horizon);
  return rep;
}

void check_commands(const Controller& c, const std::vector<Vector>& commands) {
  if (commands.empty()) throw Error(ErrorCode::EmptySequence, "empty command sequence");
  for (const auto& r : commands) {
    if (r.size() != c.tracked.size()) throw Error(ErrorCode::DimensionMismatch, "command width must match tracked channels");
  }
}

}  // namespace

Controller make_controller(const PlantModel& plant, const std::vector<std::string>& tracked,
                           const ControllerConfig& cfg, std::uint64_t seed) {
  plant.validate();
  Controller c;
  c.mode = plant.mode;
  c.tracked = tracked.empty() ? std::vector<std::string>{plant.mode.outputs.front()} : tracked;
  c.cfg = cfg;
  const std::vector<std::size_t> tr = tracked_indices(c);
  c.reference_norm.mean.assign(tr.size(), 0.0);
  c.reference_norm.std.resize(tr.size());
  for (std::size_t i = 0; i < tr.size(); ++i) c.reference_norm.std[i] = plant.narx.y_norm.std[tr[i]];
  c.output_norm = plant.narx.y_norm;
  c.control_norm = {Vector(plant.mode.inputs.size(), 0.0), plant.narx.u_norm.std};
  for (const auto& label : plant.mode.inputs) c.limits.push_back(limits_for(label));
  std::vector<std::size_t> sizes{c.regressor_length()};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(plant.mode.inputs.size());
  c.mlp = mlp_init(sizes, seed);
  c.validate();
  return c;
}

RolloutResiduals rollout_residuals(const Controller& controller, const PlantModel& plant, const ReferenceModel& ref,
                                   const std::vector<std::vector<Vector>>& command_set, Saturation saturation,
                                   bool want_jacobian) {
  controller.validate();
  std::vector<LoopRun> runs(command_set.size());
  for (const auto& cmd : command_set) check_commands(controller, cmd);
  kernels::for_each_index(command_set.size(), [&](std::size_t i) {
    runs[i] = run_nn_loop(controller, plant, ref, command_set[i], saturation, want_jacobian);
  });
  RolloutResiduals out;
  std::size_t rows = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    out.samples += command_set[i].size();
    rows += runs[i].residuals.size();
    out.diverged = out.diverged || runs[i].diverged;
  }
  out.residuals.reserve(rows);
  if (want_jacobian) out.jacobian = Matrix(rows, controller.mlp.parameter_count());
  std::size_t row = 0;
  for (const auto& run : runs) {
    out.residuals.insert(out.residuals.end(), run.residuals.begin(), run.residuals.end());
    if (want_jacobian) {
      for (std::size_t r = 0; r < run.jacobian.rows(); ++r, ++row) {
        const auto src = run.jacobian.row(r);
        std::copy(src.begin(), src.end(), out.jacobian.row(row).begin());
      }
    }
  }
  return out;
}

TrainedController train_controller(const PlantModel& plant, const ReferenceModel& ref,
                                   const std::vector<std::vector<Vector>>& command_set, std::size_t horizon,
                                   const ControllerTrainingOptions& opts) {
  if (horizon < 10) throw Error(ErrorCode::BadConfig, "controller training horizon must be at least 10");
  if (command_set.empty()) throw Error(ErrorCode::EmptySequence, "empty command set");
  for (const auto& cmd : command_set) {
    if (cmd.size() != horizon) throw Error(ErrorCode::DimensionMismatch, "command sequences must span the horizon");
  }
  if (opts.restarts == 0) throw Error(ErrorCode::BadConfig, "restarts must be at least 1");

  TrainedController best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < opts.restarts; ++i) {
    const std::uint64_t seed = opts.seed + i;
    const Controller init = make_controller(plant, opts.tracked, opts.cfg, seed);
    const std::size_t n_res = command_set.size() * horizon * init.tracked.size();
    LeastSquaresProblem prob;
    prob.samples = command_set.size() * horizon;
    prob.evaluate = [&](const Vector& theta, Vector& r, Matrix* jac) {
      Controller c = init;
      unflatten(c.mlp, theta);
      RolloutResiduals rr = rollout_residuals(c, plant, ref, command_set, Saturation::Smooth, jac != nullptr);
      if (rr.diverged) {
        r.assign(n_res, std::numeric_limits<double>::quiet_NaN());
        if (jac != nullptr) *jac = Matrix(n_res, theta.size());
        return;
      }
      r = std::move(rr.residuals);
      if (jac != nullptr) *jac = std::move(rr.jacobian);
    };
    FitResult fit;
    try {
      fit = lm_minimize(prob, flatten(init.mlp), opts.lm);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NonFiniteResidual) {
        throw Error(ErrorCode::DivergentRollout, "closed-loop rollout diverged at the initial controller");
      }
      throw;
    }
    best.seeds.push_back(seed);
    if (fit.cost < best_cost || best.seeds.size() == 1) {
      best_cost = fit.cost;
      best.controller = init;
      unflatten(best.controller.mlp, fit.theta);
      best.fit = std::move(fit);
      best.chosen_seed = seed;
    }
  }
  return best;
}

ClosedLoopResult closed_loop_simulate(const Controller& controller, const PlantModel& plant, const ReferenceModel& ref,
                                      const std::vector<Vector>& commands, Saturation saturation) {
  controller.validate();
  check_commands(controller, commands);
  LoopRun run = run_nn_loop(controller, plant, ref, commands, saturation, false);
  if (run.diverged) throw Error(ErrorCode::DivergentRollout, "closed loop around the plant network diverged");
  ClosedLoopResult res;
  res.report = make_report(controller, run.residuals, commands.size(), run.saturated);
  res.reference = run.d;
  res.trace.step = 1.0;  // sample-index time base
  for (std::size_t t = 0; t < commands.size(); ++t) {
    res.trace.times.push_back(static_cast<double>(t));
    res.trace.inputs.push_back(run.u[run.pre + t]);
    res.trace.outputs.push_back(run.y[run.pre + t]);
  }
  res.trace.states = res.trace.outputs;
  return res;
}

ClosedLoopResult closed_loop_simulate(const Controller& controller, const LtiModel& model, double h,
                                      const PlantModel& plant_model, const ReferenceModel& ref,
                                      const std::vector<Vector>& commands, Saturation saturation) {
  controller.validate();
  check_commands(controller, commands);
  if (model.d.max_abs() != 0.0) throw Error(ErrorCode::BadShape, "closed loop needs a strictly proper plant (D = 0)");
  const std::vector<std::size_t> out_idx = [&] {
    std::vector<std::size_t> idx;
    for (const auto& name : controller.mode.outputs) {
      const auto it = std::find(model.output_labels.begin(), model.output_labels.end(), name);
      if (it == model.output_labels.end()) throw Error(ErrorCode::MissingChannel, "plant has no output '" + name + "'");
      idx.push_back(static_cast<std::size_t>(it - model.output_labels.begin()));
    }
    return idx;
  }();
  const std::vector<std::size_t> in_idx = [&] {
    std::vector<std::size_t> idx;
    for (const auto& name : controller.mode.inputs) {
      const auto it = std::find(model.input_labels.begin(), model.input_labels.end(), name);
      if (it == model.input_labels.end()) throw Error(ErrorCode::MissingChannel, "plant has no input '" + name + "'");
      idx.push_back(static_cast<std::size_t>(it - model.input_labels.begin()));
    }
    return idx;
  }();
  const std::vector<std::size_t> tr = tracked_indices(controller);
  const DiscreteLti sys = discretize_zoh(model, h);
  const std::size_t horizon = commands.size();
  const std::size_t ny = out_idx.size();
  const std::size_t nu = in_idx.size();
  const std::size_t nt = tr.size();
  const std::size_t pre = std::max(plant_model.narx.cfg.max_lag(), controller.history());
  const std::vector<Vector> d = reference_step(ref, commands);

  std::vector<Vector> y(pre + horizon, Vector(ny, 0.0));
  std::vector<Vector> u(pre + horizon, Vector(nu, 0.0));
  Vector x(model.states(), 0.0);
  Vector full_u(model.inputs(), 0.0);
  Vector residuals(horizon * nt);
  std::vector<Vector> model_error;
  std::size_t saturated = 0;

  for (std::size_t t = 0; t < horizon; ++t) {
    const std::size_t k = pre + t;
    const Vector yf = sys.c * x;
    for (std::size_t i = 0; i < ny; ++i) y[k][i] = yf[out_idx[i]];
    for (double v : y[k]) {
      if (!std::isfinite(v) || std::abs(v) > kDivergenceLimit) {
        throw Error(ErrorCode::DivergentRollout, "closed loop around the linear plant diverged");
      }
    }
    const Vector yhat = narx_one_step(plant_model.narx, y, u, k);
    Vector e1(ny);
    for (std::size_t i = 0; i < ny; ++i) e1[i] = y[k][i] - yhat[i];
    model_error.push_back(std::move(e1));

    const Vector phi_c = controller_regressor(controller, commands, t, y, u, k);
    Vector z;
    regressor_scale(controller, phi_c, z);
    const Vector net = forward(controller.mlp, z);
    bool at_limit = false;
    for (std::size_t o = 0; o < nu; ++o) {
      const double raw = controller.control_norm.mean[o] + controller.control_norm.std[o] * net[o];
      const ControlRange& lim = controller.limits[o];
      u[k][o] = saturate(lim, raw, saturation).value;
      const double span = lim.hi - lim.lo;
      if (u[k][o] <= lim.lo + kLimitBand * span || u[k][o] >= lim.hi - kLimitBand * span) at_limit = true;
    }
    if (at_limit) ++saturated;
    for (std::size_t i = 0; i < nt; ++i) residuals[t * nt + i] = y[k][tr[i]] - d[t][i];

    std::fill(full_u.begin(), full_u.end(), 0.0);
    for (std::size_t o = 0; o < nu; ++o) full_u[in_idx[o]] = u[k][o];
    Vector next = sys.ad * x;
    const Vector bu = sys.bd * full_u;
    for (std::size_t i = 0; i < next.size(); ++i) next[i] += bu[i];
    x.swap(next);
  }

  ClosedLoopResult res;
  res.report = make_report(controller, residuals, horizon, saturated);
  res.report.model_error = std::move(model_error);
  res.reference = d;
  res.trace.step = h;
  for (std::size_t t = 0; t < horizon; ++t) {
    res.trace.times.push_back(static_cast<double>(t) * h);
    res.trace.inputs.push_back(u[pre + t]);
    res.trace.outputs.push_back(y[pre + t]);
  }
  res.trace.states = res.trace.outputs;
  return res;
}

double tracking_cost(const std::vector<ClosedLoopResult>& runs) {
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& run : runs) {
    for (const auto& e : run.report.tracking_error)
      for (double v : e) acc += v * v;
    n += run.report.tracking_error.size();
  }
  if (n == 0) throw Error(ErrorCode::EmptySequence, "no tracking samples");
  return acc / static_cast<double>(n);
}

std::vector<std::vector<Vector>> step_commands(const std::vector<double>& magnitudes, std::size_t horizon,
                                               std::size_t channels) {
  std::vector<std::vector<Vector>> set;
  for (double m : magnitudes) set.emplace_back(horizon, Vector(channels, m));
  return set;
}

}  // namespace hoverid
