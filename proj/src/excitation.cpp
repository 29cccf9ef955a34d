#include "hoverid/excitation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "hoverid/random.hpp"
#include "hoverid/signal_json.hpp"
#include "hoverid/trace_io.hpp"

namespace hoverid {

std::string to_string(SignalKind kind) {
  switch (kind) {
    case SignalKind::Doublet: return "doublet";
    case SignalKind::Chirp: return "chirp";
    case SignalKind::Prbs: return "prbs";
    case SignalKind::Constant: return "constant";
  }
  return "constant";
}

SignalKind signal_kind_from_string(const std::string& s) {
  if (s == "doublet") return SignalKind::Doublet;
  if (s == "chirp") return SignalKind::Chirp;
  if (s == "prbs") return SignalKind::Prbs;
  if (s == "constant") return SignalKind::Constant;
  throw Error(ErrorCode::BadSpec, "unknown signal kind '" + s + "'");
}

namespace {

constexpr double kEdgeSlack = 1e-9;

// Feedback taps (1-based stage numbers) of primitive polynomials.
const std::vector<int>& taps_for(int len) {
  static const std::array<std::vector<int>, 25> taps = {{
      {}, {}, {2, 1}, {3, 2}, {4, 3}, {5, 3}, {6, 5}, {7, 6}, {8, 6, 5, 4}, {9, 5}, {10, 7}, {11, 9},
      {12, 6, 4, 1}, {13, 4, 3, 1}, {14, 5, 3, 1}, {15, 14}, {16, 15, 13, 4}, {17, 14}, {18, 11},
      {19, 6, 2, 1}, {20, 17}, {21, 19}, {22, 21}, {23, 18}, {24, 23, 22, 17},
  }};
  if (len < 2 || len > 24) throw Error(ErrorCode::BadSpec, "PRBS register length must be in 2..24");
  return taps[static_cast<std::size_t>(len)];
}

void check_spec(const SignalSpec& spec) {
  if (!(spec.duration > 0.0) || !std::isfinite(spec.duration)) {
    throw Error(ErrorCode::BadSpec, "signal duration must be positive");
  }
  if (!std::isfinite(spec.amplitude) || !std::isfinite(spec.start)) {
    throw Error(ErrorCode::BadSpec, "signal amplitude and start must be finite");
  }
  if (spec.kind == SignalKind::Prbs) {
    if (spec.register_length < 2) throw Error(ErrorCode::BadSpec, "PRBS register length must be at least 2");
    if (!(spec.bit_period > 0.0)) throw Error(ErrorCode::BadSpec, "PRBS bit period must be positive");
    taps_for(spec.register_length);
  }
}

}  // namespace

std::vector<int> max_length_sequence(int register_length, std::size_t n) {
  const auto& taps = taps_for(register_length);
  const std::uint32_t mask = (register_length == 32) ? ~0u : ((1u << register_length) - 1u);
  std::uint32_t reg = mask;
  std::vector<int> bits(n);
  for (std::size_t k = 0; k < n; ++k) {
    bits[k] = static_cast<int>((reg >> (register_length - 1)) & 1u);
    std::uint32_t fb = 0;
    for (int t : taps) fb ^= (reg >> (t - 1)) & 1u;
    reg = ((reg << 1) | fb) & mask;
  }
  return bits;
}

Vector render_signal(const SignalSpec& spec, double h, std::size_t n) {
  if (!(h > 0.0)) throw Error(ErrorCode::BadSpec, "sample period must be positive");
  check_spec(spec);
  Vector out(n, 0.0);

  std::vector<int> bits;
  if (spec.kind == SignalKind::Prbs) {
    const auto n_bits = static_cast<std::size_t>(std::ceil(spec.duration / spec.bit_period)) + 1;
    bits = max_length_sequence(spec.register_length, n_bits);
  }

  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * h;
    const double tau = t - spec.start;
    const double rel = tau / spec.duration;
    if (rel < -kEdgeSlack || rel >= 1.0 - kEdgeSlack) continue;
    switch (spec.kind) {
      case SignalKind::Constant:
        out[k] = spec.amplitude;
        break;
      case SignalKind::Doublet:
        out[k] = rel < 0.5 - kEdgeSlack ? spec.amplitude : -spec.amplitude;
        break;
      case SignalKind::Chirp: {
        const double tp = std::max(tau, 0.0);
        const double phase =
            2.0 * std::numbers::pi * (spec.f0 * tp + (spec.f1 - spec.f0) * tp * tp / (2.0 * spec.duration));
        out[k] = spec.amplitude * std::sin(phase);
        break;
      }
      case SignalKind::Prbs: {
        const auto idx = static_cast<std::size_t>(std::max(0.0, std::floor(tau / spec.bit_period + kEdgeSlack)));
        out[k] = bits[std::min(idx, bits.size() - 1)] ? spec.amplitude : -spec.amplitude;
        break;
      }
    }
  }
  return out;
}

namespace {

std::size_t channel_index(const LtiModel& model, const std::string& name) {
  const auto it = std::find(model.input_labels.begin(), model.input_labels.end(), name);
  if (it == model.input_labels.end()) throw Error(ErrorCode::MissingChannel, "unknown input channel '" + name + "'");
  return static_cast<std::size_t>(it - model.input_labels.begin());
}

std::vector<Vector> summed_inputs(const LtiModel& model, const std::vector<SignalSpec>& specs, double h,
                                  std::size_t n) {
  std::vector<Vector> u(n, Vector(model.inputs(), 0.0));
  for (const auto& spec : specs) {
    const std::size_t ch = channel_index(model, spec.channel);
    const Vector s = render_signal(spec, h, n);
    for (std::size_t k = 0; k < n; ++k) u[k][ch] += s[k];
  }
  for (std::size_t ch = 0; ch < model.inputs(); ++ch) {
    const std::string& label = model.input_labels[ch];
    if (std::find(kInputLabels.begin(), kInputLabels.end(), label) == kInputLabels.end()) continue;
    const ControlRange range = deviation_range(label);
    for (std::size_t k = 0; k < n; ++k) {
      if (!range.contains(u[k][ch], 1e-12)) {
        throw Error(ErrorCode::BadSpec, "summed excitation on " + label + " leaves the stick range at sample " +
                                            std::to_string(k));
      }
    }
  }
  return u;
}

}  // namespace

Dataset generate_dataset(const LtiModel& model, const std::vector<SignalSpec>& specs, double h, std::size_t n,
                         const Vector& noise_std, std::uint64_t seed) {
  if (n < 2) throw Error(ErrorCode::TooShort, "dataset needs at least 2 samples");
  if (noise_std.size() != model.outputs()) throw Error(ErrorCode::DimensionMismatch, "noise_std length");
  for (double s : noise_std) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw Error(ErrorCode::BadSpec, "noise levels must be finite and >= 0");
  }
  const std::vector<Vector> u = summed_inputs(model, specs, h, n);
  const Vector x0(model.states(), 0.0);

  Dataset ds;
  ds.trace = simulate(model, x0, u, h, n);
  ds.input_labels = model.input_labels;
  ds.output_labels = model.output_labels;
  ds.noise_std = noise_std;
  ds.seed = seed;
  ds.step = h;
  ds.specs = specs;
  ds.split_index = static_cast<std::size_t>(std::floor(kTrainFraction * static_cast<double>(n)));
  ds.split_index = std::clamp<std::size_t>(ds.split_index, 1, n - 1);

  // One pass over (sample, channel) in order; every channel consumes a draw.
  Rng rng(seed);
  for (auto& y : ds.trace.outputs) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += noise_std[i] * rng.gaussian();
  }
  return ds;
}

Vector relative_noise_std(const LtiModel& model, const std::vector<SignalSpec>& specs, double h, std::size_t n,
                          double fraction) {
  const Dataset clean = generate_dataset(model, specs, h, n, Vector(model.outputs(), 0.0), 0);
  Vector out(model.outputs(), 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double mean = 0.0;
    for (const auto& y : clean.trace.outputs) mean += y[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& y : clean.trace.outputs) var += (y[i] - mean) * (y[i] - mean);
    out[i] = fraction * std::sqrt(var / static_cast<double>(n));
  }
  return out;
}

std::vector<SignalSpec> default_excitation(double h, std::size_t n, const std::vector<std::string>& channels) {
  struct ChannelRecipe {
    std::string_view label;
    double doublet;
    int register_length;
  };
  // Amplitudes are deviations from trim, scaled down on the channels with
  // the largest control derivatives. The cyclic doublets reach about
  // 0.07 rad in pitch and roll, enough to cover 0.05 rad attitude steps.
  static constexpr std::array<ChannelRecipe, input::count> recipes = {{
      {"dcoll", 0.25, 7},
      {"dlong", 0.1, 8},
      {"dped", 0.02, 9},
      {"dlat", 0.1, 10},
  }};
  constexpr std::size_t cycles = 16;
  const double horizon = h * static_cast<double>(n);
  // Each cycle visits every channel in turn. Slots of unselected channels
  // stay empty so a mode sees the same timing as the full design.
  const double slot = horizon / static_cast<double>(cycles * input::count);
  std::vector<SignalSpec> specs;
  for (std::size_t c = 0; c < cycles; ++c) {
    for (std::size_t i = 0; i < input::count; ++i) {
      const auto& r = recipes[i];
      if (!channels.empty() && std::find(channels.begin(), channels.end(), r.label) == channels.end()) continue;
      SignalSpec d;
      d.kind = SignalKind::Doublet;
      d.channel = std::string(r.label);
      d.amplitude = (c % 2 == 0) ? r.doublet : -r.doublet;
      d.start = 0.5 + slot * static_cast<double>(c * input::count + i);
      d.duration = std::min(0.25, 0.8 * slot);
      specs.push_back(d);
    }
  }
  if (specs.empty()) throw Error(ErrorCode::MissingChannel, "no known channel selected for excitation");
  // A PRBS at a tenth of the doublet amplitude fills in the high frequencies.
  for (const auto& r : recipes) {
    if (!channels.empty() && std::find(channels.begin(), channels.end(), r.label) == channels.end()) continue;
    SignalSpec p;
    p.kind = SignalKind::Prbs;
    p.channel = std::string(r.label);
    p.amplitude = 0.1 * r.doublet;
    p.start = 0.0;
    p.duration = horizon;
    p.bit_period = 2.0 * h;
    p.register_length = r.register_length;
    specs.push_back(p);
  }
  return specs;
}

nlohmann::json signal_to_json(const SignalSpec& s) {
  nlohmann::json j = {{"kind", to_string(s.kind)}, {"channel", s.channel}, {"amplitude", s.amplitude},
                      {"start", s.start},           {"duration", s.duration}};
  if (s.kind == SignalKind::Chirp) {
    j["f0"] = s.f0;
    j["f1"] = s.f1;
  }
  if (s.kind == SignalKind::Prbs) {
    j["bit_period"] = s.bit_period;
    j["register_length"] = s.register_length;
  }
  return j;
}

SignalSpec signal_from_json(const nlohmann::json& j) {
  static const std::array<std::string_view, 9> known = {"kind",  "channel", "amplitude",  "start",          "duration",
                                                        "f0",    "f1",      "bit_period", "register_length"};
  if (!j.is_object()) throw Error(ErrorCode::BadConfig, "signal spec must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw Error(ErrorCode::BadConfig, "unknown signal key '" + key + "'");
    }
  }
  try {
    SignalSpec s;
    s.kind = signal_kind_from_string(j.at("kind").get<std::string>());
    s.channel = j.at("channel").get<std::string>();
    s.amplitude = j.value("amplitude", 0.0);
    s.start = j.value("start", 0.0);
    s.duration = j.at("duration").get<double>();
    s.f0 = j.value("f0", 0.0);
    s.f1 = j.value("f1", 0.0);
    s.bit_period = j.value("bit_period", 0.0);
    s.register_length = j.value("register_length", 0);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("malformed signal spec: ") + e.what());
  }
}

namespace {

std::filesystem::path with_ext(const std::filesystem::path& stem, const char* ext) {
  std::filesystem::path p = stem;
  p += ext;
  return p;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::filesystem::path& stem) {
  write_trace_csv(with_ext(stem, ".csv"), ds.trace, ds.input_labels, ds.output_labels);
  nlohmann::json j;
  j["seed"] = ds.seed;
  j["h"] = ds.step;
  j["noise_std"] = ds.noise_std;
  j["split_index"] = ds.split_index;
  j["specs"] = nlohmann::json::array();
  for (const auto& s : ds.specs) j["specs"].push_back(signal_to_json(s));
  std::ofstream os(with_ext(stem, ".json"), std::ios::binary);
  if (!os) throw Error(ErrorCode::Io, "cannot write dataset sidecar for " + stem.string());
  os << j.dump(2) << '\n';
}

Dataset load_dataset(const std::filesystem::path& stem) {
  std::ifstream is(with_ext(stem, ".json"), std::ios::binary);
  if (!is) throw Error(ErrorCode::Io, "cannot open dataset sidecar for " + stem.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Io, std::string("malformed dataset sidecar: ") + e.what());
  }
  const std::vector<std::string> known(kInputLabels.begin(), kInputLabels.end());
  LabeledTrace lt = read_trace_csv(with_ext(stem, ".csv"), known);

  Dataset ds;
  ds.trace = std::move(lt.trace);
  ds.input_labels = std::move(lt.input_labels);
  ds.output_labels = std::move(lt.output_labels);
  ds.seed = j.at("seed").get<std::uint64_t>();
  ds.step = j.at("h").get<double>();
  ds.trace.step = ds.step;
  ds.noise_std = j.at("noise_std").get<Vector>();
  ds.split_index = j.at("split_index").get<std::size_t>();
  for (const auto& s : j.at("specs")) ds.specs.push_back(signal_from_json(s));
  if (ds.split_index == 0 || ds.split_index >= ds.trace.size()) {
    throw Error(ErrorCode::BadConfig, "split_index out of range in " + stem.string());
  }
  return ds;
}

}  // namespace hoverid
