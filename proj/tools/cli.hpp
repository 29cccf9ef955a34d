#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hoverid/excitation.hpp"
#include "hoverid/lm.hpp"
#include "hoverid/model_io.hpp"

namespace hoverid::cli {

struct IdentifyConfig {
  std::size_t na = 2;
  std::size_t nb = 2;
  std::size_t nk = 1;
  std::vector<std::size_t> hidden = {10};
  std::size_t restarts = 10;
  LmOptions lm;
};

struct ControllerRunConfig {
  std::size_t reference_lags = 2;
  std::size_t output_lags = 2;
  std::size_t control_lags = 1;
  std::vector<std::size_t> hidden = {8};
  std::size_t restarts = 3;
  std::size_t horizon = 200;
  std::vector<double> commands = {0.05, -0.05};
  std::vector<std::string> tracked;
  double reference_frequency = 2.0;
  double reference_damping = 0.9;
  LmOptions lm;
};

// Everything that determines the bytes a subcommand writes, apart from the
// input files. Paths are flags, not configuration.
struct RunConfig {
  double step = 0.02;
  std::size_t samples = 2000;
  std::uint64_t seed = 1;
  double noise_fraction = 0.01;
  std::string mode = "longitudinal";
  std::string excitation = "mode";  // "mode": the mode's inputs only; "all": every input
  std::optional<std::vector<SignalSpec>> signals;  // replaces the default excitation
  Vector initial_state = Vector(10, 0.0);
  IdentifyConfig identify;
  std::size_t max_lag = 25;
  ControllerRunConfig controller;

  // Throws BadConfig on values that violate module preconditions.
  void validate() const;
};

RunConfig default_config();
// Starts from the defaults; unknown keys are BadConfig errors.
RunConfig config_from_json(const Json& j);
Json to_json(const RunConfig& c);

std::uint64_t fnv1a64(std::string_view bytes);

// Entry point shared by the executable and the tests. args excludes the
// program name. Returns 0 on success, 1 on usage, configuration or I/O
// errors, 2 on numerical failures.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hoverid::cli
