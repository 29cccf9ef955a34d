#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hoverid/dynamics.hpp"

namespace hoverid {

enum class SignalKind { Doublet, Chirp, Prbs, Constant };

std::string to_string(SignalKind kind);
SignalKind signal_kind_from_string(const std::string& s);

struct SignalSpec {
  SignalKind kind = SignalKind::Constant;
  std::string channel;
  double amplitude = 0.0;
  double start = 0.0;     // s
  double duration = 0.0;  // s
  // Chirp sweep, Hz.
  double f0 = 0.0;
  double f1 = 0.0;
  // PRBS bit period (s) and shift-register length.
  double bit_period = 0.0;
  int register_length = 0;
};

// Samples at t_k = k h, k < n. All kinds are zero outside
// [start, start + duration).
//   doublet:  +amplitude on the first half of the window, -amplitude on the second
//   chirp:    amplitude sin(2 pi (f0 tau + (f1 - f0) tau^2 / (2 duration)))
//   prbs:     maximal-length shift-register bits mapped to +-amplitude
//   constant: amplitude
Vector render_signal(const SignalSpec& spec, double h, std::size_t n);

// One period-(2^len - 1) maximal-length sequence of 0/1 bits, repeated to
// n bits, from a Fibonacci register seeded with all ones. Lengths 2..24.
std::vector<int> max_length_sequence(int register_length, std::size_t n);

struct Dataset {
  Trace trace;  // inputs are noise-free, outputs carry the measurement noise
  std::vector<std::string> input_labels;
  std::vector<std::string> output_labels;
  Vector noise_std;
  std::uint64_t seed = 0;
  double step = 0.0;
  std::size_t split_index = 0;
  std::vector<SignalSpec> specs;
};

inline constexpr double kTrainFraction = 0.7;

// Simulates the model from rest under the summed signals and adds seeded
// zero-mean Gaussian noise to the outputs. Signals on hover channels are
// checked against the stick ranges around trim.
Dataset generate_dataset(const LtiModel& model, const std::vector<SignalSpec>& specs, double h,
                         std::size_t n, const Vector& noise_std, std::uint64_t seed);

// Per-output noise levels equal to fraction times the sample standard
// deviation of the noise-free outputs of the same excitation.
Vector relative_noise_std(const LtiModel& model, const std::vector<SignalSpec>& specs, double h,
                          std::size_t n, double fraction);

// Sixteen cycles of short doublets with alternating sign, one slot per
// channel per cycle, plus a low-amplitude PRBS on every selected channel.
// Sized for n samples at step h. An empty channel list excites all four inputs.
std::vector<SignalSpec> default_excitation(double h, std::size_t n,
                                           const std::vector<std::string>& channels = {});

// <stem>.csv holds the trace, <stem>.json the metadata.
void save_dataset(const Dataset& ds, const std::filesystem::path& stem);
Dataset load_dataset(const std::filesystem::path& stem);

}  // namespace hoverid
