#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "hoverid/correlation.hpp"
#include "hoverid/mrc.hpp"
#include "hoverid/signal_json.hpp"
#include "hoverid/sysid.hpp"
#include "hoverid/trace_io.hpp"

#ifndef HOVERID_VERSION
#define HOVERID_VERSION "0.0.0"
#endif

namespace hoverid::cli {

namespace fs = std::filesystem;

namespace {

void reject_unknown(const Json& j, std::initializer_list<std::string_view> keys, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::BadConfig, where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw Error(ErrorCode::BadConfig, "unknown config key '" + where + key + "'");
    }
  }
}

template <class T>
void read_if(const Json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

LmOptions lm_from_json(const Json& j, LmOptions o, const std::string& where) {
  reject_unknown(j, {"mu0", "mu_factor", "max_iters", "grad_tol", "step_tol", "cost_tol", "max_inflations"}, where);
  read_if(j, "mu0", o.mu0);
  read_if(j, "mu_factor", o.mu_factor);
  read_if(j, "max_iters", o.max_iters);
  read_if(j, "grad_tol", o.grad_tol);
  read_if(j, "step_tol", o.step_tol);
  read_if(j, "cost_tol", o.cost_tol);
  read_if(j, "max_inflations", o.max_inflations);
  return o;
}

Json lm_json(const LmOptions& o) {
  return {{"mu0", o.mu0},           {"mu_factor", o.mu_factor}, {"max_iters", o.max_iters},
          {"grad_tol", o.grad_tol}, {"step_tol", o.step_tol},   {"cost_tol", o.cost_tol},
          {"max_inflations", o.max_inflations}};
}

}  // namespace

RunConfig default_config() {
  RunConfig c;
  c.identify.lm.max_iters = 60;
  c.controller.lm.max_iters = 60;
  return c;
}

void RunConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::BadConfig, what); };
  if (!(step > 0.0)) bad("step must be positive");
  if (samples < 2) bad("samples must be at least 2");
  if (!(noise_fraction >= 0.0)) bad("noise_fraction must be non-negative");
  ModeSplit::by_name(mode);
  if (excitation != "mode" && excitation != "all") bad("excitation must be 'mode' or 'all'");
  if (initial_state.size() != state::count) bad("initial_state needs 10 entries");
  if (identify.restarts == 0) bad("identify.restarts must be at least 1");
  if (identify.nb == 0) bad("identify.nb must be at least 1");
  identify.lm.validate();
  if (max_lag == 0) bad("max_lag must be at least 1");
  if (controller.horizon < 10) bad("controller.horizon must be at least 10");
  if (controller.restarts == 0) bad("controller.restarts must be at least 1");
  if (controller.commands.empty()) bad("controller.commands must not be empty");
  if (!(controller.reference_frequency > 0.0) || !(controller.reference_damping > 0.0)) {
    bad("reference model needs positive frequency and damping");
  }
  controller.lm.validate();
}

RunConfig config_from_json(const Json& j) {
  RunConfig c = default_config();
  try {
    reject_unknown(j, {"step", "samples", "seed", "noise_fraction", "mode", "excitation", "signals", "initial_state",
                       "identify", "max_lag", "controller"},
                   "");
    read_if(j, "step", c.step);
    read_if(j, "samples", c.samples);
    read_if(j, "seed", c.seed);
    read_if(j, "noise_fraction", c.noise_fraction);
    read_if(j, "mode", c.mode);
    read_if(j, "excitation", c.excitation);
    if (j.contains("signals")) {
      std::vector<SignalSpec> specs;
      for (const auto& s : j.at("signals")) specs.push_back(signal_from_json(s));
      c.signals = std::move(specs);
    }
    read_if(j, "initial_state", c.initial_state);
    read_if(j, "max_lag", c.max_lag);
    if (j.contains("identify")) {
      const Json& id = j.at("identify");
      reject_unknown(id, {"na", "nb", "nk", "hidden", "restarts", "lm"}, "identify.");
      read_if(id, "na", c.identify.na);
      read_if(id, "nb", c.identify.nb);
      read_if(id, "nk", c.identify.nk);
      read_if(id, "hidden", c.identify.hidden);
      read_if(id, "restarts", c.identify.restarts);
      if (id.contains("lm")) c.identify.lm = lm_from_json(id.at("lm"), c.identify.lm, "identify.lm.");
    }
    if (j.contains("controller")) {
      const Json& cj = j.at("controller");
      reject_unknown(cj, {"reference_lags", "output_lags", "control_lags", "hidden", "restarts", "horizon", "commands",
                          "tracked", "reference_frequency", "reference_damping", "lm"},
                     "controller.");
      ControllerRunConfig& cc = c.controller;
      read_if(cj, "reference_lags", cc.reference_lags);
      read_if(cj, "output_lags", cc.output_lags);
      read_if(cj, "control_lags", cc.control_lags);
      read_if(cj, "hidden", cc.hidden);
      read_if(cj, "restarts", cc.restarts);
      read_if(cj, "horizon", cc.horizon);
      read_if(cj, "commands", cc.commands);
      read_if(cj, "tracked", cc.tracked);
      read_if(cj, "reference_frequency", cc.reference_frequency);
      read_if(cj, "reference_damping", cc.reference_damping);
      if (cj.contains("lm")) cc.lm = lm_from_json(cj.at("lm"), cc.lm, "controller.lm.");
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

Json to_json(const RunConfig& c) {
  Json j;
  j["step"] = c.step;
  j["samples"] = c.samples;
  j["seed"] = c.seed;
  j["noise_fraction"] = c.noise_fraction;
  j["mode"] = c.mode;
  j["excitation"] = c.excitation;
  if (c.signals) {
    j["signals"] = Json::array();
    for (const auto& s : *c.signals) j["signals"].push_back(Json(signal_to_json(s)));
  }
  j["initial_state"] = c.initial_state;
  j["identify"] = {{"na", c.identify.na},         {"nb", c.identify.nb},
                   {"nk", c.identify.nk},         {"hidden", c.identify.hidden},
                   {"restarts", c.identify.restarts}, {"lm", lm_json(c.identify.lm)}};
  j["max_lag"] = c.max_lag;
  const ControllerRunConfig& cc = c.controller;
  j["controller"] = {{"reference_lags", cc.reference_lags},
                     {"output_lags", cc.output_lags},
                     {"control_lags", cc.control_lags},
                     {"hidden", cc.hidden},
                     {"restarts", cc.restarts},
                     {"horizon", cc.horizon},
                     {"commands", cc.commands},
                     {"tracked", cc.tracked},
                     {"reference_frequency", cc.reference_frequency},
                     {"reference_damping", cc.reference_damping},
                     {"lm", lm_json(cc.lm)}};
  return j;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

struct Flags {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<std::size_t> samples;
  std::optional<double> step;
  std::optional<std::size_t> restarts;
  std::optional<std::size_t> max_iters;
  std::optional<std::size_t> horizon;
  std::string data;
  std::string model;
  std::string controller;
  std::string inputs;
};

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw Error(ErrorCode::Io, "cannot open " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Tracks declared inputs and written outputs for the manifest.
class Run {
 public:
  Run(std::string command, RunConfig cfg, fs::path out) : command_(std::move(command)), cfg_(std::move(cfg)), out_(std::move(out)) {
    fs::create_directories(out_);
  }

  const RunConfig& cfg() const { return cfg_; }
  const fs::path& out() const { return out_; }

  fs::path input(const fs::path& p) {
    inputs_[p.filename().string()] = "fnv1a64:" + hex64(fnv1a64(read_file(p)));
    return p;
  }
  fs::path output(const std::string& name) {
    outputs_.insert(name);
    return out_ / name;
  }
  void record(const fs::path& written) { outputs_.insert(fs::relative(written, out_).generic_string()); }

  void write_manifest() {
    Json m;
    m["command"] = command_;
    m["config"] = to_json(cfg_);
    m["seed"] = cfg_.seed;
    m["versions"] = {{"hoverid", HOVERID_VERSION}, {"compiler", __VERSION__}, {"cxx", static_cast<long>(__cplusplus)}};
    m["input_hashes"] = Json::object();
    for (const auto& [name, h] : inputs_) m["input_hashes"][name] = h;
    m["output_files"] = std::vector<std::string>(outputs_.begin(), outputs_.end());
    write_json(m, out_ / (command_ + ".manifest.json"));
  }

 private:
  std::string command_;
  RunConfig cfg_;
  fs::path out_;
  std::map<std::string, std::string> inputs_;
  std::set<std::string> outputs_;
};

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error(ErrorCode::Io, "cannot write " + p.string());
  os << text;
  if (!os) throw Error(ErrorCode::Io, "write failed for " + p.string());
}

fs::path with_ext(fs::path stem, const char* ext) {
  stem += ext;
  return stem;
}

fs::path or_default(const std::string& flag, const fs::path& fallback) { return flag.empty() ? fallback : fs::path(flag); }

std::string plant_name(const RunConfig& c) { return c.mode + "_plant.json"; }
std::string controller_name(const RunConfig& c) { return c.mode + "_controller.json"; }

std::vector<SignalSpec> excitation_for(const RunConfig& c) {
  if (c.signals) return *c.signals;
  std::vector<std::string> channels;
  if (c.excitation == "mode") channels = ModeSplit::by_name(c.mode).inputs;
  return default_excitation(c.step, c.samples, channels);
}

std::string eigen_csv(const std::vector<ModeRecord>& modes) {
  std::string s = "eigenvalue_real,eigenvalue_imag,damping,frequency\n";
  for (const auto& m : modes) {
    s += format_number(m.eigenvalue.real()) + "," + format_number(m.eigenvalue.imag()) + "," +
         format_number(m.damping) + "," + format_number(m.frequency) + "\n";
  }
  return s;
}

int cmd_eig(Run& run, std::ostream& out) {
  const auto modes = eigen_report(hover_model());
  write_text(run.output("eigenvalues.csv"), eigen_csv(modes));
  char line[128];
  out << "eigenvalue                      damping   frequency\n";
  for (const auto& m : modes) {
    std::snprintf(line, sizeof line, "%10.3g %+10.3gi   %9.3g %11.3g\n", m.eigenvalue.real(), m.eigenvalue.imag(),
                  m.damping, m.frequency);
    out << line;
  }
  return 0;
}

std::vector<Vector> render_inputs(const std::vector<SignalSpec>& specs, double h, std::size_t n) {
  std::vector<Vector> u(n, Vector(input::count, 0.0));
  for (const auto& s : specs) {
    const auto it = std::find(kInputLabels.begin(), kInputLabels.end(), s.channel);
    if (it == kInputLabels.end()) throw Error(ErrorCode::MissingChannel, "unknown input channel '" + s.channel + "'");
    const auto ch = static_cast<std::size_t>(it - kInputLabels.begin());
    const Vector x = render_signal(s, h, n);
    for (std::size_t k = 0; k < n; ++k) u[k][ch] += x[k];
  }
  for (const auto& row : u)
    for (std::size_t ch = 0; ch < input::count; ++ch)
      if (!deviation_range(ch).contains(row[ch])) {
        throw Error(ErrorCode::BadSpec, "input " + std::string(kInputLabels[ch]) + " leaves its control range");
      }
  return u;
}

int cmd_simulate(Run& run, const Flags& f, std::ostream& out) {
  const RunConfig& c = run.cfg();
  const LtiModel model = hover_model();
  std::vector<Vector> u;
  if (!f.inputs.empty()) {
    const std::vector<std::string> known(kInputLabels.begin(), kInputLabels.end());
    const LabeledTrace lt = read_trace_csv(run.input(f.inputs), known);
    u.assign(lt.trace.inputs.size(), Vector(input::count, 0.0));
    for (std::size_t j = 0; j < lt.input_labels.size(); ++j) {
      const auto ch = static_cast<std::size_t>(
          std::find(kInputLabels.begin(), kInputLabels.end(), lt.input_labels[j]) - kInputLabels.begin());
      for (std::size_t k = 0; k < u.size(); ++k) u[k][ch] = lt.trace.inputs[k][j];
    }
    if (u.empty()) throw Error(ErrorCode::EmptySequence, "input file has no samples");
  } else {
    u = render_inputs(c.signals.value_or(std::vector<SignalSpec>{}), c.step, c.samples);
  }
  const Trace tr = simulate(model, c.initial_state, u, c.step, u.size());
  write_trace_csv(run.output("simulation.csv"), tr, model.input_labels, model.output_labels);
  out << "simulated " << tr.size() << " samples at h=" << format_number(c.step) << "\n";
  return 0;
}

int cmd_excite(Run& run, std::ostream& out) {
  const RunConfig& c = run.cfg();
  const LtiModel model = hover_model();
  const auto specs = excitation_for(c);
  const Vector noise = relative_noise_std(model, specs, c.step, c.samples, c.noise_fraction);
  const Dataset ds = generate_dataset(model, specs, c.step, c.samples, noise, c.seed);
  save_dataset(ds, run.out() / "dataset");
  run.output("dataset.csv");
  run.output("dataset.json");
  out << "wrote " << ds.trace.size() << " samples, split at " << ds.split_index << "\n";
  return 0;
}

DatasetView load_view(Run& run, const Flags& f) {
  const fs::path stem = or_default(f.data, run.out() / "dataset");
  run.input(with_ext(stem, ".csv"));
  run.input(with_ext(stem, ".json"));
  return make_view(load_dataset(stem), ModeSplit::by_name(run.cfg().mode));
}

PlantModel load_plant(Run& run, const Flags& f) {
  PlantModel pm = load_plant_model(run.input(or_default(f.model, run.out() / plant_name(run.cfg()))));
  if (pm.mode.name != run.cfg().mode) {
    throw Error(ErrorCode::BadConfig, "plant model is for mode '" + pm.mode.name + "', config asks for '" +
                                          run.cfg().mode + "'");
  }
  return pm;
}

std::string log_csv(const std::vector<IterationRecord>& log) {
  std::ostringstream os;
  write_iteration_log_csv(os, log);
  return os.str();
}

int cmd_identify(Run& run, const Flags& f, std::ostream& out) {
  const RunConfig& c = run.cfg();
  const DatasetView view = load_view(run, f);
  IdentifyOptions o;
  o.na = c.identify.na;
  o.nb = c.identify.nb;
  o.nk = c.identify.nk;
  o.hidden = c.identify.hidden;
  o.restarts = c.identify.restarts;
  o.lm = c.identify.lm;
  o.seed = c.seed;
  const PlantModel pm = identify(view, o);
  save_plant_model(pm, run.output(plant_name(c)));
  write_text(run.output(c.mode + "_identify_log.csv"), log_csv(pm.training.fit.log));
  const auto best = std::min_element(pm.training.heldout_mse.begin(), pm.training.heldout_mse.end());
  out << c.mode << ": seed " << pm.training.chosen_seed << ", training cost " << format_number(pm.training.fit.cost)
      << ", held-out mse " << format_number(*best) << " (" << pm.training.fit.iterations << " iterations, "
      << to_string(pm.training.fit.termination) << ")\n";
  return 0;
}

double max_abs_cross(const ResidualVariant& v) {
  double m = 0.0;
  for (const auto& cc : v.cross)
    if (!cc.degenerate)
      for (double x : cc.values) m = std::max(m, std::abs(x));
  return m;
}

ResidualReport run_validation(Run& run, const Flags& f, const fs::path& csv_dir, DatasetView* view_out = nullptr) {
  const DatasetView view = load_view(run, f);
  const PlantModel pm = load_plant(run, f);
  ResidualReport rep = validate(pm, view, run.cfg().max_lag);
  fs::create_directories(csv_dir);
  for (const auto& p : write_report_csvs(rep, view, csv_dir)) run.record(p);
  if (view_out) *view_out = view;
  return rep;
}

int cmd_validate(Run& run, const Flags& f, std::ostream& out) {
  const ResidualReport rep = run_validation(run, f, run.out());
  write_report_json(rep, run.output(run.cfg().mode + "_validation.json"));
  out << rep.mode << " held-out N=" << (rep.evaluated.end - rep.evaluated.begin) << ", band "
      << format_number(rep.band) << "\n";
  for (const auto& ch : rep.one_step.channels) out << "  " << ch.name << " one-step NRMSE " << format_number(ch.nrmse) << "\n";
  out << "  max |cross-correlation| " << format_number(max_abs_cross(rep.one_step)) << "\n";
  return 0;
}

ReferenceModel reference_for(const RunConfig& c) {
  return ReferenceModel::second_order(c.controller.reference_frequency, c.controller.reference_damping, c.step);
}

std::vector<std::string> tracked_for(const RunConfig& c) {
  if (!c.controller.tracked.empty()) return c.controller.tracked;
  return {ModeSplit::by_name(c.mode).outputs.front()};
}

int cmd_train(Run& run, const Flags& f, std::ostream& out) {
  const RunConfig& c = run.cfg();
  const PlantModel pm = load_plant(run, f);
  ControllerTrainingOptions o;
  o.lm = c.controller.lm;
  o.restarts = c.controller.restarts;
  o.seed = c.seed;
  o.cfg.reference_lags = c.controller.reference_lags;
  o.cfg.output_lags = c.controller.output_lags;
  o.cfg.control_lags = c.controller.control_lags;
  o.cfg.hidden = c.controller.hidden;
  o.tracked = tracked_for(c);
  const auto commands = step_commands(c.controller.commands, c.controller.horizon, o.tracked.size());
  const TrainedController tc = train_controller(pm, reference_for(c), commands, c.controller.horizon, o);
  save_controller(tc.controller, run.output(controller_name(c)), &tc);
  write_text(run.output(c.mode + "_controller_log.csv"), log_csv(tc.fit.log));
  out << c.mode << " controller: seed " << tc.chosen_seed << ", cost " << format_number(tc.fit.cost) << " ("
      << tc.fit.iterations << " iterations, " << to_string(tc.fit.termination) << ")\n";
  return 0;
}

std::string closed_loop_csv(const ClosedLoopResult& r, const std::vector<Vector>& commands, const Controller& c,
                            double h) {
  std::string s = "t";
  for (const auto& t : c.tracked) s += ",command_" + t + ",reference_" + t + ",error_" + t;
  for (const auto& y : c.mode.outputs) s += "," + y;
  for (const auto& u : c.mode.inputs) s += "," + u;
  s += "\n";
  for (std::size_t k = 0; k < commands.size(); ++k) {
    s += format_number(static_cast<double>(k) * h);
    for (std::size_t i = 0; i < c.tracked.size(); ++i) {
      s += "," + format_number(commands[k][i]) + "," + format_number(r.reference[k][i]) + "," +
           format_number(r.report.tracking_error[k][i]);
    }
    for (double y : r.trace.outputs[k]) s += "," + format_number(y);
    for (double u : r.trace.inputs[k]) s += "," + format_number(u);
    s += "\n";
  }
  return s;
}

Json tracking_json(const TrackingReport& t, double magnitude) {
  Vector rel(t.steady_state_error.size());
  for (std::size_t i = 0; i < rel.size(); ++i) {
    rel[i] = magnitude != 0.0 ? t.steady_state_error[i] / std::abs(magnitude) : 0.0;
  }
  return {{"channels", t.channels},
          {"rms", t.rms},
          {"steady_state_error", t.steady_state_error},
          {"steady_state_error_relative", rel},
          {"saturation_fraction", t.saturation_fraction},
          {"cost", t.cost}};
}

// Runs every configured step command on the network plant and on the hover model.
Json evaluate_all(Run& run, const Flags& f, const fs::path& csv_dir, std::ostream& out) {
  const RunConfig& c = run.cfg();
  const PlantModel pm = load_plant(run, f);
  const Controller ctrl = load_controller(run.input(or_default(f.controller, run.out() / controller_name(c))));
  const ReferenceModel ref = reference_for(c);
  const auto commands = step_commands(c.controller.commands, c.controller.horizon, ctrl.tracked.size());
  fs::create_directories(csv_dir);
  Json runs = Json::array();
  for (std::size_t i = 0; i < commands.size(); ++i) {
    const double mag = c.controller.commands[i];
    const ClosedLoopResult nn = closed_loop_simulate(ctrl, pm, ref, commands[i]);
    const ClosedLoopResult lti = closed_loop_simulate(ctrl, hover_model(), c.step, pm, ref, commands[i]);
    const std::string tag = c.mode + "_closed_loop_" + std::to_string(i);
    const fs::path pn = csv_dir / (tag + "_nn.csv"), pl = csv_dir / (tag + "_lti.csv");
    write_text(pn, closed_loop_csv(nn, commands[i], ctrl, c.step));
    write_text(pl, closed_loop_csv(lti, commands[i], ctrl, c.step));
    run.record(pn);
    run.record(pl);
    runs.push_back({{"command", mag}, {"nn_plant", tracking_json(nn.report, mag)}, {"hover_model", tracking_json(lti.report, mag)}});
    out << "command " << format_number(mag) << ": steady-state error " << format_number(nn.report.steady_state_error[0])
        << " (network plant), " << format_number(lti.report.steady_state_error[0]) << " (hover model)\n";
  }
  return {{"mode", c.mode}, {"tracked", ctrl.tracked}, {"horizon", c.controller.horizon}, {"runs", runs}};
}

int cmd_evaluate(Run& run, const Flags& f, std::ostream& out) {
  const Json j = evaluate_all(run, f, run.out(), out);
  write_json(j, run.output(run.cfg().mode + "_evaluation.json"));
  return 0;
}

int cmd_report(Run& run, const Flags& f, std::ostream& out) {
  const fs::path dir = run.out() / "report";
  fs::create_directories(dir);
  write_text(dir / "eigenvalues.csv", eigen_csv(eigen_report(hover_model())));
  run.record(dir / "eigenvalues.csv");
  Json index;
  index["eigenvalues"] = "eigenvalues.csv";
  const ResidualReport rep = run_validation(run, f, dir);
  write_report_json(rep, dir / (rep.mode + "_validation.json"));
  run.record(dir / (rep.mode + "_validation.json"));
  const std::string m = rep.mode;
  for (const std::string v : {"one_step", "free_run"}) {
    index["response_" + v] = m + "_response_" + v + ".csv";
    index["correlation_" + v] = {m + "_autocorr_" + v + ".csv", m + "_crosscorr_" + v + ".csv"};
    index["histogram_" + v] = m + "_histogram_" + v + ".csv";
  }
  const fs::path ctrl_path = or_default(f.controller, run.out() / controller_name(run.cfg()));
  if (fs::exists(ctrl_path)) {
    const Json ev = evaluate_all(run, f, dir, out);
    write_json(ev, dir / (m + "_evaluation.json"));
    run.record(dir / (m + "_evaluation.json"));
    index["tracking"] = m + "_evaluation.json";
  }
  write_json(index, dir / "index.json");
  run.record(dir / "index.json");
  out << "report written to " << dir.filename().string() << "/\n";
  return 0;
}

RunConfig effective_config(const Flags& f) {
  RunConfig c = f.config.empty() ? default_config() : config_from_json(read_json(f.config));
  if (f.seed) c.seed = *f.seed;
  if (f.mode) c.mode = *f.mode;
  if (f.samples) c.samples = *f.samples;
  if (f.step) c.step = *f.step;
  if (f.restarts) {
    c.identify.restarts = *f.restarts;
    c.controller.restarts = *f.restarts;
  }
  if (f.max_iters) {
    c.identify.lm.max_iters = *f.max_iters;
    c.controller.lm.max_iters = *f.max_iters;
  }
  if (f.horizon) c.controller.horizon = *f.horizon;
  c.validate();
  return c;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hover helicopter identification and model-reference control", "hoverid"};
  app.require_subcommand(1);
  Flags f;
  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {
      {"eig", "Eigenvalues, damping and frequency of the hover model"},
      {"simulate", "Simulate the hover model from signals or an input CSV"},
      {"excite", "Generate a noisy identification dataset"},
      {"identify", "Fit a NARX plant network for one mode"},
      {"validate", "Residual analysis of a plant network on held-out data"},
      {"train-controller", "Train the model-reference controller against a plant network"},
      {"evaluate", "Closed-loop step responses on the plant network and the hover model"},
      {"report", "Bundle plot data for responses, correlations, histograms and tracking"},
  };
  for (const Sub& s : subs) {
    CLI::App* sc = app.add_subcommand(s.name, s.help);
    sc->add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
    sc->add_option("--out", f.out, "Output directory");
    sc->add_option("--seed", f.seed, "Random seed");
    sc->add_option("--mode", f.mode, "longitudinal or lateral");
    sc->add_option("--samples", f.samples, "Sample count");
    sc->add_option("--step", f.step, "Sample period in seconds");
    sc->add_option("--restarts", f.restarts, "Training restarts");
    sc->add_option("--max-iters", f.max_iters, "Levenberg-Marquardt iteration cap");
    sc->add_option("--horizon", f.horizon, "Controller rollout horizon");
    sc->add_option("--data", f.data, "Dataset stem (without .csv/.json)");
    sc->add_option("--model", f.model, "Plant model JSON");
    sc->add_option("--controller", f.controller, "Controller JSON");
    sc->add_option("--inputs", f.inputs, "Input CSV for simulate");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    Run r(command, effective_config(f), f.out);
    int status = 0;
    if (command == "eig") status = cmd_eig(r, out);
    else if (command == "simulate") status = cmd_simulate(r, f, out);
    else if (command == "excite") status = cmd_excite(r, out);
    else if (command == "identify") status = cmd_identify(r, f, out);
    else if (command == "validate") status = cmd_validate(r, f, out);
    else if (command == "train-controller") status = cmd_train(r, f, out);
    else if (command == "evaluate") status = cmd_evaluate(r, f, out);
    else if (command == "report") status = cmd_report(r, f, out);
    r.write_manifest();
    return status;
  } catch (const Error& e) {
    err << "hoverid " << command << ": " << e.what() << "\n";
    return is_numerical(e.code()) ? 2 : 1;
  } catch (const fs::filesystem_error& e) {
    err << "hoverid " << command << ": " << e.what() << "\n";
    return 1;
  }
}

}  // namespace hoverid::cli
