#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hoverid {

enum class ErrorCode {
  SingularMatrix,
  NoConvergence,
  Overflow,
  DimensionMismatch,
  GimbalProximity,
  BadSpec,
  BadShape,
  InsufficientHistory,
  EmptySequence,
  LinearSolveFailure,
  NonFiniteResidual,
  MissingChannel,
  TooShort,
  ZeroVariance,
  DivergentRollout,
  BadConfig,
  Io,
};

std::string_view to_string(ErrorCode code);

// Numerical failures map to CLI exit status 2, configuration and I/O
// problems to exit status 1.
bool is_numerical(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hoverid
