#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "hoverid/dynamics.hpp"

namespace hoverid {

// Shortest round-trip decimal form (17 significant digits at most).
std::string format_number(double x);
double parse_number(const std::string& s);

struct LabeledTrace {
  Trace trace;
  std::vector<std::string> input_labels;
  std::vector<std::string> output_labels;
};

// CSV with header "t,<input labels>,<output labels>", one row per sample.
// States are not written; for full-state-output models they equal outputs.
void write_trace_csv(std::ostream& os, const Trace& trace, const std::vector<std::string>& input_labels,
                     const std::vector<std::string>& output_labels);
void write_trace_csv(const std::filesystem::path& path, const Trace& trace,
                     const std::vector<std::string>& input_labels,
                     const std::vector<std::string>& output_labels);

// Reads a trace written by write_trace_csv. The number of input columns is
// determined by matching header names against known_inputs.
LabeledTrace read_trace_csv(const std::filesystem::path& path, const std::vector<std::string>& known_inputs);

}  // namespace hoverid
