#include "hoverid/sysid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "hoverid/kernels.hpp"
#include "hoverid/trace_io.hpp"

namespace hoverid {

ModeSplit ModeSplit::longitudinal() { return {"longitudinal", {"dlong", "dcoll"}, {"theta", "u", "w", "q"}}; }

ModeSplit ModeSplit::lateral() { return {"lateral", {"dlat", "dped"}, {"phi", "v", "p", "r"}}; }

ModeSplit ModeSplit::by_name(const std::string& name) {
  if (name == "longitudinal") return longitudinal();
  if (name == "lateral") return lateral();
  throw Error(ErrorCode::BadConfig, "unknown mode '" + name + "' (expected longitudinal or lateral)");
}

namespace {

std::vector<std::size_t> column_indices(const std::vector<std::string>& available,
                                        const std::vector<std::string>& wanted) {
  std::vector<std::size_t> idx;
  for (const auto& w : wanted) {
    const auto it = std::find(available.begin(), available.end(), w);
    if (it == available.end()) throw Error(ErrorCode::MissingChannel, "dataset has no channel '" + w + "'");
    idx.push_back(static_cast<std::size_t>(it - available.begin()));
  }
  return idx;
}

std::vector<Vector> select(const std::vector<Vector>& samples, const std::vector<std::size_t>& idx) {
  std::vector<Vector> out(samples.size(), Vector(idx.size()));
  for (std::size_t k = 0; k < samples.size(); ++k)
    for (std::size_t i = 0; i < idx.size(); ++i) out[k][i] = samples[k][idx[i]];
  return out;
}

}  // namespace

DatasetView make_view(const Dataset& ds, const ModeSplit& mode) {
  DatasetView v;
  v.mode = mode;
  v.inputs = select(ds.trace.inputs, column_indices(ds.input_labels, mode.inputs));
  v.outputs = select(ds.trace.outputs, column_indices(ds.output_labels, mode.outputs));
  v.split_index = ds.split_index;
  v.step = ds.step;
  return v;
}

std::pair<DatasetView, DatasetView> split_modes(const Dataset& ds) {
  return {make_view(ds, ModeSplit::longitudinal()), make_view(ds, ModeSplit::lateral())};
}

void PlantModel::validate() const {
  narx.validate();
  if (narx.cfg.n_outputs != mode.outputs.size() || narx.cfg.n_inputs != mode.inputs.size()) {
    throw Error(ErrorCode::BadShape, "plant network channels do not match its mode");
  }
}

namespace {

// Normalized regressors and targets for target indices [begin, end).
struct RegressionSet {
  std::vector<Vector> z;
  std::vector<Vector> target;
};

RegressionSet build_set(const NarxModel& m, const DatasetView& view, std::size_t begin, std::size_t end) {
  RegressionSet s;
  s.z.reserve(end - begin);
  s.target.reserve(end - begin);
  for (std::size_t t = begin; t < end; ++t) {
    s.z.push_back(m.normalize_regressor(build_regressor(view.outputs, view.inputs, t, m.cfg)));
    s.target.push_back(m.y_norm.normalize(view.outputs[t]));
  }
  return s;
}

LeastSquaresProblem make_problem(const Mlp& shape, const RegressionSet& set) {
  const std::size_t ny = shape.output_size();
  LeastSquaresProblem prob;
  prob.samples = set.z.size();
  prob.evaluate = [shape, &set, ny](const Vector& theta, Vector& r, Matrix* jac) {
    Mlp net = shape;
    unflatten(net, theta);
    const std::size_t n = set.z.size();
    r.assign(n * ny, 0.0);
    if (jac != nullptr) *jac = Matrix(n * ny, theta.size());
    kernels::for_each_index(n, [&](std::size_t s) {
      const MlpEvaluation ev = evaluate(net, set.z[s], jac != nullptr, false);
      for (std::size_t o = 0; o < ny; ++o) {
        r[s * ny + o] = ev.y[o] - set.target[s][o];
        if (jac != nullptr) {
          const auto src = ev.d_params.row(o);
          std::copy(src.begin(), src.end(), jac->row(s * ny + o).begin());
        }
      }
    });
  };
  return prob;
}

double set_mse(const Mlp& net, const RegressionSet& set) {
  double acc = 0.0;
  for (std::size_t s = 0; s < set.z.size(); ++s) {
    const Vector y = forward(net, set.z[s]);
    for (std::size_t o = 0; o < y.size(); ++o) acc += (y[o] - set.target[s][o]) * (y[o] - set.target[s][o]);
  }
  return acc / static_cast<double>(set.z.size());
}

}  // namespace

PlantModel identify(const DatasetView& view, const IdentifyOptions& opts) {
  if (opts.restarts == 0) throw Error(ErrorCode::BadConfig, "restarts must be at least 1");
  PlantModel pm;
  pm.mode = view.mode;
  NarxConfig cfg{opts.na, opts.nb, opts.nk, view.mode.outputs.size(), view.mode.inputs.size()};
  cfg.validate();
  const std::size_t n = view.size();
  if (n <= 10 * cfg.regressor_length()) {
    throw Error(ErrorCode::TooShort, "dataset must exceed 10x the regressor length");
  }
  const std::size_t p = cfg.max_lag();
  if (view.split_index <= p + 1 || view.split_index >= n) {
    throw Error(ErrorCode::TooShort, "training split too short for the lag structure");
  }

  pm.narx.cfg = cfg;
  pm.narx.y_norm = Normalizer::fit(view.outputs, 0, view.split_index);
  pm.narx.u_norm = Normalizer::fit(view.inputs, 0, view.split_index);
  std::vector<std::size_t> sizes{cfg.regressor_length()};
  sizes.insert(sizes.end(), opts.hidden.begin(), opts.hidden.end());
  sizes.push_back(cfg.n_outputs);
  pm.narx.mlp = mlp_zeros(sizes);

  pm.training.train = {p, view.split_index};
  pm.training.test = {view.split_index, n};
  const RegressionSet train = build_set(pm.narx, view, p, view.split_index);
  const RegressionSet test = build_set(pm.narx, view, view.split_index, n);
  const LeastSquaresProblem prob = make_problem(pm.narx.mlp, train);

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < opts.restarts; ++i) {
    const std::uint64_t seed = opts.seed + i;
    const Mlp init = mlp_init(sizes, seed);
    FitResult fit = lm_minimize(prob, flatten(init), opts.lm);
    Mlp trained = init;
    unflatten(trained, fit.theta);
    const double held = set_mse(trained, test);
    pm.training.seeds.push_back(seed);
    pm.training.heldout_mse.push_back(held);
    // Strict comparison keeps the lowest seed on ties.
    if (held < best || pm.training.seeds.size() == 1) {
      best = held;
      pm.training.chosen_seed = seed;
      pm.training.fit = std::move(fit);
      pm.narx.mlp = std::move(trained);
    }
  }
  return pm;
}

double heldout_one_step_mse(const PlantModel& model, const DatasetView& view) {
  const RegressionSet test = build_set(model.narx, view, view.split_index, view.size());
  return set_mse(model.narx.mlp, test);
}

namespace {

Vector channel(const std::vector<Vector>& seq, std::size_t i) {
  Vector out(seq.size());
  for (std::size_t k = 0; k < seq.size(); ++k) out[k] = seq[k][i];
  return out;
}

ResidualVariant analyze(const std::vector<Vector>& measured, std::vector<Vector> predictions,
                        const std::vector<Vector>& inputs, const ModeSplit& mode, std::size_t max_lag) {
  ResidualVariant v;
  v.predictions = std::move(predictions);
  v.errors.resize(measured.size());
  for (std::size_t k = 0; k < measured.size(); ++k) {
    v.errors[k].resize(measured[k].size());
    for (std::size_t i = 0; i < measured[k].size(); ++i) v.errors[k][i] = measured[k][i] - v.predictions[k][i];
  }
  for (std::size_t i = 0; i < mode.outputs.size(); ++i) {
    ChannelResidual ch;
    ch.name = mode.outputs[i];
    const Vector y = channel(measured, i);
    const Vector yhat = channel(v.predictions, i);
    const Vector e = channel(v.errors, i);
    ch.nrmse = nrmse(y, yhat);
    ch.fit_percent = 100.0 * (1.0 - ch.nrmse);
    try {
      ch.autocorrelation = autocorrelation(e, max_lag);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::ZeroVariance) throw;
      ch.degenerate = true;
      ch.autocorrelation.assign(max_lag + 1, 0.0);
    }
    ch.histogram = histogram(e);
    v.channels.push_back(std::move(ch));

    for (std::size_t j = 0; j < mode.inputs.size(); ++j) {
      CrossCorrelationSeries cc;
      cc.output = mode.outputs[i];
      cc.input = mode.inputs[j];
      try {
        cc.values = cross_correlation(e, channel(inputs, j), max_lag);
      } catch (const Error& err) {
        if (err.code() != ErrorCode::ZeroVariance) throw;
        cc.degenerate = true;
        cc.values.assign(2 * max_lag + 1, 0.0);
      }
      v.cross.push_back(std::move(cc));
    }
  }
  return v;
}

}  // namespace

ResidualReport validate(const PlantModel& model, const DatasetView& view, std::size_t max_lag) {
  model.validate();
  const std::size_t n_total = view.size();
  const std::size_t begin = view.split_index;
  const std::size_t p = model.narx.cfg.max_lag();
  if (begin < p || begin >= n_total) throw Error(ErrorCode::TooShort, "no held-out samples to validate on");
  const std::size_t n = n_total - begin;
  if (4 * max_lag >= n) throw Error(ErrorCode::TooShort, "max_lag must be below N/4");

  ResidualReport rep;
  rep.mode = model.mode.name;
  rep.max_lag = max_lag;
  rep.band = confidence_band(n);
  rep.evaluated = {begin, n_total};
  rep.train = model.training.train;
  rep.disjoint_from_training = !rep.evaluated.overlaps(rep.train);

  const std::vector<Vector> measured(view.outputs.begin() + static_cast<std::ptrdiff_t>(begin), view.outputs.end());
  const std::vector<Vector> inputs(view.inputs.begin() + static_cast<std::ptrdiff_t>(begin), view.inputs.end());

  std::vector<Vector> one_step;
  one_step.reserve(n);
  for (std::size_t t = begin; t < n_total; ++t) one_step.push_back(narx_one_step(model.narx, view.outputs, view.inputs, t));
  rep.one_step = analyze(measured, std::move(one_step), inputs, model.mode, max_lag);

  const auto off = static_cast<std::ptrdiff_t>(begin - p);
  const std::vector<Vector> u_seg(view.inputs.begin() + off, view.inputs.end());
  const std::vector<Vector> y_init(view.outputs.begin() + off, view.outputs.begin() + static_cast<std::ptrdiff_t>(begin));
  std::vector<Vector> free = narx_free_run(model.narx, u_seg, y_init);
  free.erase(free.begin(), free.begin() + static_cast<std::ptrdiff_t>(p));
  rep.free_run = analyze(measured, std::move(free), inputs, model.mode, max_lag);
  return rep;
}

namespace {

nlohmann::json variant_json(const ResidualVariant& v) {
  nlohmann::json j;
  j["channels"] = nlohmann::json::array();
  for (const auto& ch : v.channels) {
    j["channels"].push_back({{"name", ch.name},
                             {"nrmse", ch.nrmse},
                             {"fit_percent", ch.fit_percent},
                             {"degenerate", ch.degenerate},
                             {"autocorrelation", ch.autocorrelation},
                             {"histogram", {{"edges", ch.histogram.edges}, {"counts", ch.histogram.counts}}}});
  }
  j["cross_correlation"] = nlohmann::json::array();
  for (const auto& cc : v.cross) {
    j["cross_correlation"].push_back(
        {{"output", cc.output}, {"input", cc.input}, {"degenerate", cc.degenerate}, {"values", cc.values}});
  }
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::Io, "cannot write " + path.string());
  os << text;
}

}  // namespace

void write_report_json(const ResidualReport& report, const std::filesystem::path& path) {
  nlohmann::json j;
  j["mode"] = report.mode;
  j["max_lag"] = report.max_lag;
  j["band"] = report.band;
  j["evaluated"] = {report.evaluated.begin, report.evaluated.end};
  j["train"] = {report.train.begin, report.train.end};
  j["disjoint_from_training"] = report.disjoint_from_training;
  j["one_step"] = variant_json(report.one_step);
  j["free_run"] = variant_json(report.free_run);
  write_text(path, j.dump(2) + "\n");
}

std::vector<std::filesystem::path> write_report_csvs(const ResidualReport& report, const DatasetView& view,
                                                     const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> written;
  const auto emit = [&](const std::string& name, const std::string& text) {
    const auto path = dir / (report.mode + "_" + name + ".csv");
    write_text(path, text);
    written.push_back(path);
  };
  const std::size_t lag = report.max_lag;
  for (const auto& [tag, v] : {std::pair<std::string, const ResidualVariant*>{"one_step", &report.one_step},
                               std::pair<std::string, const ResidualVariant*>{"free_run", &report.free_run}}) {
    std::string resp = "t";
    for (const auto& ch : v->channels) resp += "," + ch.name + "," + ch.name + "_hat";
    resp += "\n";
    for (std::size_t k = 0; k < v->predictions.size(); ++k) {
      resp += format_number(static_cast<double>(report.evaluated.begin + k) * view.step);
      for (std::size_t i = 0; i < v->channels.size(); ++i) {
        resp += "," + format_number(view.outputs[report.evaluated.begin + k][i]) + "," +
                format_number(v->predictions[k][i]);
      }
      resp += "\n";
    }
    emit("response_" + tag, resp);

    std::string ac = "lag";
    for (const auto& ch : v->channels) ac += "," + ch.name;
    ac += ",band\n";
    for (std::size_t k = 0; k <= lag; ++k) {
      ac += std::to_string(k);
      for (const auto& ch : v->channels) ac += "," + format_number(ch.autocorrelation[k]);
      ac += "," + format_number(report.band) + "\n";
    }
    emit("autocorr_" + tag, ac);

    std::string xc = "lag";
    for (const auto& cc : v->cross) xc += "," + cc.output + "__" + cc.input;
    xc += ",band\n";
    for (std::size_t k = 0; k <= 2 * lag; ++k) {
      xc += std::to_string(static_cast<long long>(k) - static_cast<long long>(lag));
      for (const auto& cc : v->cross) xc += "," + format_number(cc.values[k]);
      xc += "," + format_number(report.band) + "\n";
    }
    emit("crosscorr_" + tag, xc);

    std::string hist = "channel,bin_lo,bin_hi,count\n";
    for (const auto& ch : v->channels) {
      for (std::size_t b = 0; b < ch.histogram.counts.size(); ++b) {
        hist += ch.name + "," + format_number(ch.histogram.edges[b]) + "," +
                format_number(ch.histogram.edges[b + 1]) + "," + std::to_string(ch.histogram.counts[b]) + "\n";
      }
    }
    emit("histogram_" + tag, hist);
  }
  return written;
}

}  // namespace hoverid
