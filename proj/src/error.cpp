#include "anchordid/error.hpp"

namespace anchordid {

std::string_view code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ParseError: return "PARSE_ERROR";
    case ErrorCode::BadHeader: return "BAD_HEADER";
    case ErrorCode::BadTime: return "BAD_TIME";
    case ErrorCode::DuplicateCell: return "DUPLICATE_CELL";
    case ErrorCode::UnbalancedPanel: return "UNBALANCED_PANEL";
    case ErrorCode::AdoptionOutOfRange: return "ADOPTION_OUT_OF_RANGE";
    case ErrorCode::InconsistentCohort: return "INCONSISTENT_COHORT";
    case ErrorCode::NoNeverTreated: return "NO_NEVER_TREATED";
    case ErrorCode::EmptyCohort: return "EMPTY_COHORT";
    case ErrorCode::RankDeficient: return "RANK_DEFICIENT";
    case ErrorCode::UnknownCohort: return "UNKNOWN_COHORT";
    case ErrorCode::SinglePrePeriod: return "SINGLE_PRE_PERIOD";
    case ErrorCode::UnstableEstimate: return "UNSTABLE_ESTIMATE";
    case ErrorCode::ResamplingDegenerate: return "RESAMPLING_DEGENERATE";
    case ErrorCode::IndexMismatch: return "INDEX_MISMATCH";
    case ErrorCode::NonInvertible: return "NON_INVERTIBLE";
    case ErrorCode::NoPreDifferences: return "NO_PRE_DIFFERENCES";
    case ErrorCode::CohortWithoutPreDifference: return "COHORT_WITHOUT_PRE_DIFFERENCE";
    case ErrorCode::CohortWithoutTwoPrePeriods: return "COHORT_WITHOUT_TWO_PRE_PERIODS";
    case ErrorCode::MemberCountExceedsCap: return "MEMBER_COUNT_EXCEEDS_CAP";
    case ErrorCode::AlreadyMapped: return "ALREADY_MAPPED";
    case ErrorCode::AllMembersInfeasible: return "ALL_MEMBERS_INFEASIBLE";
    case ErrorCode::UnboundedProgram: return "UNBOUNDED_PROGRAM";
    case ErrorCode::SingularVcov: return "SINGULAR_VCOV";
    case ErrorCode::MissingVcov: return "MISSING_VCOV";
    case ErrorCode::EmptyTarget: return "EMPTY_TARGET";
    case ErrorCode::BadArgument: return "BAD_ARGUMENT";
    case ErrorCode::Io: return "IO_ERROR";
  }
  return "UNKNOWN";
}

}  // namespace anchordid
