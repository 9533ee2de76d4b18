#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stabcert {

enum class ErrorCode {
  DimensionMismatch,
  NonFinite,
  FactorizationFailure,
  NotASubgradient,
  InfeasibleApproximation,
  JointDecompositionFailure,
  NotASolution,
  InvalidArgument,
  // problem-file validation
  MalformedJson,
  MissingField,
  UnknownSchemaVersion,
  MuNonpositive,
  OverlappingGroups,
  GroupIndexOutOfRange,
  IncompletePartition,
  EmptyGroup,
  UnknownRegularizer,
  Io,
};

constexpr std::string_view code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::DimensionMismatch: return "DIMENSION_MISMATCH";
    case ErrorCode::NonFinite: return "NON_FINITE";
    case ErrorCode::FactorizationFailure: return "FACTORIZATION_FAILURE";
    case ErrorCode::NotASubgradient: return "NOT_A_SUBGRADIENT";
    case ErrorCode::InfeasibleApproximation: return "INFEASIBLE_APPROXIMATION";
    case ErrorCode::JointDecompositionFailure: return "JOINT_DECOMPOSITION_FAILURE";
    case ErrorCode::NotASolution: return "NOT_A_SOLUTION";
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::MalformedJson: return "MALFORMED_JSON";
    case ErrorCode::MissingField: return "MISSING_FIELD";
    case ErrorCode::UnknownSchemaVersion: return "UNKNOWN_SCHEMA_VERSION";
    case ErrorCode::MuNonpositive: return "MU_NONPOSITIVE";
    case ErrorCode::OverlappingGroups: return "OVERLAPPING_GROUPS";
    case ErrorCode::GroupIndexOutOfRange: return "GROUP_INDEX_OUT_OF_RANGE";
    case ErrorCode::IncompletePartition: return "INCOMPLETE_PARTITION";
    case ErrorCode::EmptyGroup: return "EMPTY_GROUP";
    case ErrorCode::UnknownRegularizer: return "UNKNOWN_REGULARIZER";
    case ErrorCode::Io: return "IO_ERROR";
  }
  return "UNKNOWN";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

}  // namespace stabcert
