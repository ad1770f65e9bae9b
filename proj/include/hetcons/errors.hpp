#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hetcons {

enum class ErrorCode {
  // linalg
  NonSquare,
  ConvergenceFailure,
  UnstableA,
  SingularSystem,
  NotStabilizable,
  RankDeficient,
  // graph
  DimensionMismatch,
  AllZero,
  NoSpanningTree,
  // agents
  UnknownName,
  InvalidDimension,
  BetaNearZero,
  FiniteEscape,
  // synthesis
  NotConjugateClosed,
  UnstablePole,
  NonPositiveParameter,
  DegreeExceedsTarget,
  NotObservable,
  PlacementFailure,
  InconsistentSpectra,
  InvalidArgument,
  // switching
  Reducible,
  A4Violated,
  NotRankOne,
  // metrics
  EmptyWindow,
  NonPositiveSeries,
  // scenario files
  ParseError,
  ValidationError,
};

std::string_view to_string(ErrorCode code);

/// True for failures of the numerics (divergence, non-convergence) as
/// opposed to bad input. The CLI maps these to exit status 2.
bool is_numeric_failure(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string path = {})
      : std::runtime_error(message), code_(code), path_(std::move(path)) {}

  ErrorCode code() const noexcept { return code_; }

  /// Location of the offending input, e.g. "agents[2].custom.r" or
  /// "line 4, column 12". Empty when not applicable.
  const std::string& path() const noexcept { return path_; }

 private:
  ErrorCode code_;
  std::string path_;
};

}  // namespace hetcons
