#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace anchordid {

// Stable, machine-readable failure categories. The string forms returned by
// code_name() are part of the CLI contract and must not change.
enum class ErrorCode {
  ParseError,
  BadHeader,
  BadTime,
  DuplicateCell,
  UnbalancedPanel,
  AdoptionOutOfRange,
  InconsistentCohort,
  NoNeverTreated,
  EmptyCohort,
  RankDeficient,
  UnknownCohort,
  SinglePrePeriod,
  UnstableEstimate,
  ResamplingDegenerate,
  IndexMismatch,
  NonInvertible,
  NoPreDifferences,
  CohortWithoutPreDifference,
  CohortWithoutTwoPrePeriods,
  MemberCountExceedsCap,
  AlreadyMapped,
  AllMembersInfeasible,
  UnboundedProgram,
  SingularVcov,
  MissingVcov,
  EmptyTarget,
  BadArgument,
  Io,
};

[[nodiscard]] std::string_view code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace anchordid
