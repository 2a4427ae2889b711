#include "pdi/errors.hpp"

namespace pdi {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::MalformedAttempt: return "MalformedAttempt";
    case ErrorCode::MemoParseFailure: return "MemoParseFailure";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::MissingSection: return "MissingSection";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::UnterminatedCodeFence: return "UnterminatedCodeFence";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::NonPositiveAlpha: return "NonPositiveAlpha";
    case ErrorCode::VocabMismatch: return "VocabMismatch";
    case ErrorCode::MissingSkill: return "MissingSkill";
    case ErrorCode::NoStrategyText: return "NoStrategyText";
    case ErrorCode::Unsolved: return "Unsolved";
    case ErrorCode::InsufficientHistory: return "InsufficientHistory";
    case ErrorCode::DegenerateCohort: return "DegenerateCohort";
    case ErrorCode::DegenerateCorrelation: return "DegenerateCorrelation";
    case ErrorCode::RejectedWeights: return "RejectedWeights";
    case ErrorCode::FoldTooSmall: return "FoldTooSmall";
    case ErrorCode::MissingRecord: return "MissingRecord";
    case ErrorCode::EmptyCohort: return "EmptyCohort";
    case ErrorCode::EmptyEligibleSet: return "EmptyEligibleSet";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::InsufficientMemos: return "InsufficientMemos";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::PortContractViolation: return "PortContractViolation";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
      code_(code) {}

}  // namespace pdi
