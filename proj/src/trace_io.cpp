#include "hoverid/trace_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace hoverid {

std::string format_number(double x) {
  if (x == 0.0) return "0";
  char buf[64];
  // Shortest representation that round-trips.
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

double parse_number(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorCode::Io, "cannot parse number '" + s + "'");
  }
  return v;
}

void write_trace_csv(std::ostream& os, const Trace& trace, const std::vector<std::string>& input_labels,
                     const std::vector<std::string>& output_labels) {
  os << 't';
  for (const auto& l : input_labels) os << ',' << l;
  for (const auto& l : output_labels) os << ',' << l;
  os << '\n';
  for (std::size_t k = 0; k < trace.size(); ++k) {
    if (trace.inputs[k].size() != input_labels.size() || trace.outputs[k].size() != output_labels.size()) {
      throw Error(ErrorCode::DimensionMismatch, "trace sample length does not match labels");
    }
    os << format_number(trace.times[k]);
    for (double v : trace.inputs[k]) os << ',' << format_number(v);
    for (double v : trace.outputs[k]) os << ',' << format_number(v);
    os << '\n';
  }
}

void write_trace_csv(const std::filesystem::path& path, const Trace& trace,
                     const std::vector<std::string>& input_labels,
                     const std::vector<std::string>& output_labels) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  write_trace_csv(os, trace, input_labels, output_labels);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

LabeledTrace read_trace_csv(const std::filesystem::path& path, const std::vector<std::string>& known_inputs) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::Io, "empty trace file " + path.string());
  const auto header = split_csv_line(line);
  if (header.empty() || header[0] != "t") throw Error(ErrorCode::Io, "trace header must start with 't'");

  LabeledTrace out;
  std::size_t col = 1;
  while (col < header.size() &&
         std::find(known_inputs.begin(), known_inputs.end(), header[col]) != known_inputs.end()) {
    out.input_labels.push_back(header[col++]);
  }
  for (; col < header.size(); ++col) out.output_labels.push_back(header[col]);

  const std::size_t ni = out.input_labels.size();
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw Error(ErrorCode::Io, "ragged row in " + path.string());
    out.trace.times.push_back(parse_number(cells[0]));
    Vector u(ni);
    Vector y(cells.size() - 1 - ni);
    for (std::size_t i = 0; i < ni; ++i) u[i] = parse_number(cells[1 + i]);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = parse_number(cells[1 + ni + i]);
    out.trace.inputs.push_back(std::move(u));
    out.trace.outputs.push_back(std::move(y));
  }
  out.trace.step = out.trace.size() > 1 ? out.trace.times[1] - out.trace.times[0] : 0.0;
  return out;
}

}  // namespace hoverid
