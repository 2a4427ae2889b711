#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pdi {

enum class ErrorCode {
  // trajectory model / bundle io
  MissingField,
  MalformedAttempt,
  MemoParseFailure,
  InvariantViolation,
  IoFailure,
  // parsers
  MissingSection,
  EmptyInput,
  UnterminatedCodeFence,
  // textstats
  EmptyCorpus,
  NonPositiveAlpha,
  VocabMismatch,
  // pdi engine
  MissingSkill,
  NoStrategyText,
  Unsolved,
  InsufficientHistory,
  DegenerateCohort,
  DegenerateCorrelation,
  RejectedWeights,
  FoldTooSmall,
  // cohort stats
  MissingRecord,
  EmptyCohort,
  EmptyEligibleSet,
  EmptyGroup,
  InsufficientMemos,
  DegenerateInput,
  // harness
  PortContractViolation,
  // generic
  InvalidArgument,
  Internal,
};

std::string_view error_code_name(ErrorCode code);

// Every failure surfaced by the library carries a code plus a message that
// names the offending path or field.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

  // Internal errors indicate a broken invariant inside the library rather
  // than bad input.
  bool is_internal() const noexcept { return code_ == ErrorCode::Internal; }

 private:
  ErrorCode code_;
};

}  // namespace pdi
