#include "hetcons/errors.hpp"

namespace hetcons {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonSquare: return "NonSquare";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::UnstableA: return "UnstableA";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NotStabilizable: return "NotStabilizable";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::AllZero: return "AllZero";
    case ErrorCode::NoSpanningTree: return "NoSpanningTree";
    case ErrorCode::UnknownName: return "UnknownName";
    case ErrorCode::InvalidDimension: return "InvalidDimension";
    case ErrorCode::BetaNearZero: return "BetaNearZero";
    case ErrorCode::FiniteEscape: return "FiniteEscape";
    case ErrorCode::NotConjugateClosed: return "NotConjugateClosed";
    case ErrorCode::UnstablePole: return "UnstablePole";
    case ErrorCode::NonPositiveParameter: return "NonPositiveParameter";
    case ErrorCode::DegreeExceedsTarget: return "DegreeExceedsTarget";
    case ErrorCode::NotObservable: return "NotObservable";
    case ErrorCode::PlacementFailure: return "PlacementFailure";
    case ErrorCode::InconsistentSpectra: return "InconsistentSpectra";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Reducible: return "Reducible";
    case ErrorCode::A4Violated: return "A4Violated";
    case ErrorCode::NotRankOne: return "NotRankOne";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::NonPositiveSeries: return "NonPositiveSeries";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
  }
  return "Unknown";
}

bool is_numeric_failure(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConvergenceFailure:
    case ErrorCode::SingularSystem:
    case ErrorCode::BetaNearZero:
    case ErrorCode::FiniteEscape:
    case ErrorCode::PlacementFailure:
    case ErrorCode::InconsistentSpectra:
      return true;
    default:
      return false;
  }
}

}  // namespace hetcons
