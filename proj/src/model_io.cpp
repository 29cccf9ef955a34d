#include "hoverid/model_io.hpp"

#include <fstream>

namespace hoverid {

namespace {

Json matrix_rows(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    rows.push_back(Vector(r.begin(), r.end()));
  }
  return rows;
}

Matrix matrix_from_rows(const Json& j, std::size_t rows, std::size_t cols) {
  if (!j.is_array() || j.size() != rows) throw Error(ErrorCode::BadShape, "weight matrix row count");
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto r = j[i].get<Vector>();
    if (r.size() != cols) throw Error(ErrorCode::BadShape, "weight matrix column count");
    std::copy(r.begin(), r.end(), m.row(i).begin());
  }
  return m;
}

Json range_json(const IndexRange& r) { return {{"begin", r.begin}, {"end", r.end}}; }
IndexRange range_from_json(const Json& j) { return {j.at("begin").get<std::size_t>(), j.at("end").get<std::size_t>()}; }

Termination termination_from_string(const std::string& s) {
  for (Termination t : {Termination::GradTol, Termination::StepTol, Termination::MaxIters, Termination::CostTol}) {
    if (to_string(t) == s) return t;
  }
  throw Error(ErrorCode::BadConfig, "unknown termination '" + s + "'");
}

FitResult fit_from_json(const Json& j) {
  FitResult f;
  f.cost = j.at("cost").get<double>();
  f.iterations = j.at("iterations").get<std::size_t>();
  f.termination = termination_from_string(j.at("termination").get<std::string>());
  f.cost_history = j.at("cost_history").get<Vector>();
  return f;
}

void expect_role(const Json& j, const char* role) {
  if (!j.contains("role") || j.at("role") != role) {
    throw Error(ErrorCode::BadConfig, std::string("model file is not a ") + role);
  }
}

// nlohmann's exceptions carry no code; surface them as configuration errors.
template <class F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("malformed model json: ") + e.what());
  }
}

}  // namespace

Json to_json(const Mlp& mlp) {
  Json j;
  j["layer_sizes"] = mlp.layer_sizes;
  j["weights"] = Json::array();
  for (const auto& w : mlp.weights) j["weights"].push_back(matrix_rows(w));
  j["biases"] = mlp.biases;
  return j;
}

Mlp mlp_from_json(const Json& j) {
  return guarded([&] {
    Mlp m = mlp_zeros(j.at("layer_sizes").get<std::vector<std::size_t>>());
    const Json& w = j.at("weights");
    const Json& b = j.at("biases");
    if (w.size() != m.layer_count() || b.size() != m.layer_count()) throw Error(ErrorCode::BadShape, "layer count");
    for (std::size_t l = 0; l < m.layer_count(); ++l) {
      m.weights[l] = matrix_from_rows(w[l], m.layer_sizes[l + 1], m.layer_sizes[l]);
      m.biases[l] = b[l].get<Vector>();
    }
    m.validate();
    return m;
  });
}

Json to_json(const Normalizer& n) { return {{"mean", n.mean}, {"std", n.std}}; }

Normalizer normalizer_from_json(const Json& j) {
  return guarded([&] {
    Normalizer n{j.at("mean").get<Vector>(), j.at("std").get<Vector>()};
    if (n.mean.size() != n.std.size()) throw Error(ErrorCode::BadShape, "normalizer sizes differ");
    return n;
  });
}

Json to_json(const ModeSplit& m) { return {{"name", m.name}, {"inputs", m.inputs}, {"outputs", m.outputs}}; }

ModeSplit mode_from_json(const Json& j) {
  return guarded([&] {
    return ModeSplit{j.at("name").get<std::string>(), j.at("inputs").get<std::vector<std::string>>(),
                     j.at("outputs").get<std::vector<std::string>>()};
  });
}

Json to_json(const FitResult& fit) {
  return {{"cost", fit.cost},
          {"iterations", fit.iterations},
          {"termination", to_string(fit.termination)},
          {"cost_history", fit.cost_history}};
}

Json to_json(const PlantModel& model) {
  const NarxConfig& c = model.narx.cfg;
  Json j;
  j["role"] = "plant";
  j["mode"] = to_json(model.mode);
  j["narx"] = {{"na", c.na}, {"nb", c.nb}, {"nk", c.nk}, {"n_outputs", c.n_outputs}, {"n_inputs", c.n_inputs}};
  j.update(to_json(model.narx.mlp));
  j["y_norm"] = to_json(model.narx.y_norm);
  j["u_norm"] = to_json(model.narx.u_norm);
  const TrainingRecord& t = model.training;
  j["training"] = {{"seeds", t.seeds},         {"heldout_mse", t.heldout_mse}, {"chosen_seed", t.chosen_seed},
                   {"fit", to_json(t.fit)},    {"train", range_json(t.train)}, {"test", range_json(t.test)}};
  return j;
}

PlantModel plant_model_from_json(const Json& j) {
  return guarded([&] {
    expect_role(j, "plant");
    PlantModel m;
    m.mode = mode_from_json(j.at("mode"));
    const Json& c = j.at("narx");
    m.narx.cfg = {c.at("na").get<std::size_t>(), c.at("nb").get<std::size_t>(), c.at("nk").get<std::size_t>(),
                  c.at("n_outputs").get<std::size_t>(), c.at("n_inputs").get<std::size_t>()};
    m.narx.mlp = mlp_from_json(j);
    m.narx.y_norm = normalizer_from_json(j.at("y_norm"));
    m.narx.u_norm = normalizer_from_json(j.at("u_norm"));
    const Json& t = j.at("training");
    m.training.seeds = t.at("seeds").get<std::vector<std::uint64_t>>();
    m.training.heldout_mse = t.at("heldout_mse").get<Vector>();
    m.training.chosen_seed = t.at("chosen_seed").get<std::uint64_t>();
    m.training.fit = fit_from_json(t.at("fit"));
    m.training.train = range_from_json(t.at("train"));
    m.training.test = range_from_json(t.at("test"));
    m.validate();
    return m;
  });
}

Json to_json(const Controller& c, const TrainedController* training) {
  Json j;
  j["role"] = "controller";
  j["mode"] = to_json(c.mode);
  j["tracked"] = c.tracked;
  j["controller"] = {{"reference_lags", c.cfg.reference_lags},
                     {"output_lags", c.cfg.output_lags},
                     {"control_lags", c.cfg.control_lags},
                     {"hidden", c.cfg.hidden}};
  j.update(to_json(c.mlp));
  j["reference_norm"] = to_json(c.reference_norm);
  j["output_norm"] = to_json(c.output_norm);
  j["control_norm"] = to_json(c.control_norm);
  j["limits"] = Json::array();
  for (const auto& l : c.limits) j["limits"].push_back({l.lo, l.hi});
  if (training != nullptr) {
    j["training"] = {{"seeds", training->seeds}, {"chosen_seed", training->chosen_seed}, {"fit", to_json(training->fit)}};
  }
  return j;
}

Controller controller_from_json(const Json& j) {
  return guarded([&] {
    expect_role(j, "controller");
    Controller c;
    c.mode = mode_from_json(j.at("mode"));
    c.tracked = j.at("tracked").get<std::vector<std::string>>();
    const Json& cfg = j.at("controller");
    c.cfg.reference_lags = cfg.at("reference_lags").get<std::size_t>();
    c.cfg.output_lags = cfg.at("output_lags").get<std::size_t>();
    c.cfg.control_lags = cfg.at("control_lags").get<std::size_t>();
    c.cfg.hidden = cfg.at("hidden").get<std::vector<std::size_t>>();
    c.mlp = mlp_from_json(j);
    c.reference_norm = normalizer_from_json(j.at("reference_norm"));
    c.output_norm = normalizer_from_json(j.at("output_norm"));
    c.control_norm = normalizer_from_json(j.at("control_norm"));
    for (const auto& l : j.at("limits")) c.limits.push_back({l.at(0).get<double>(), l.at(1).get<double>()});
    c.validate();
    return c;
  });
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::Io, "cannot open " + path.string());
  try {
    return Json::parse(is);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::BadConfig, path.string() + ": " + e.what());
  }
}

void write_json(const Json& j, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::Io, "cannot write " + path.string());
  os << j.dump(2) << '\n';
  if (!os) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

void save_plant_model(const PlantModel& model, const std::filesystem::path& path) { write_json(to_json(model), path); }
PlantModel load_plant_model(const std::filesystem::path& path) { return plant_model_from_json(read_json(path)); }

void save_controller(const Controller& c, const std::filesystem::path& path, const TrainedController* training) {
  write_json(to_json(c, training), path);
}
Controller load_controller(const std::filesystem::path& path) { return controller_from_json(read_json(path)); }

}  // namespace hoverid
