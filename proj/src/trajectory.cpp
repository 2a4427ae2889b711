#include "pdi/trajectory.hpp"

#include <set>

#include "pdi/errors.hpp"

namespace pdi {

bool Memo::same_sections(const Memo& other) const {
  return attempt_count_header == other.attempt_count_header &&
         attempts_log == other.attempts_log && commands == other.commands &&
         verified_facts == other.verified_facts &&
         current_error_pattern == other.current_error_pattern &&
         next_strategy == other.next_strategy;
}

std::string_view condition_name(Condition c) {
  switch (c) {
    case Condition::Baseline: return "baseline";
    case Condition::GeneratedSkill: return "generated_skill";
    case Condition::HumanSkill: return "human_skill";
  }
  return "baseline";
}

std::optional<Condition> parse_condition(std::string_view name) {
  if (name == "baseline") return Condition::Baseline;
  if (name == "generated_skill") return Condition::GeneratedSkill;
  if (name == "human_skill") return Condition::HumanSkill;
  return std::nullopt;
}

std::string_view mode_label_name(ModeLabel m) {
  return m == ModeLabel::InteractionFree ? "interaction_free" : "iterative";
}

std::optional<ModeLabel> TrajectoryBundle::mode_label() const {
  if (!solved_at) return std::nullopt;
  if (*solved_at == 1 && memos.empty()) return ModeLabel::InteractionFree;
  return ModeLabel::Iterative;
}

const Attempt* TrajectoryBundle::attempt_by_index(int index) const {
  for (const auto& a : attempts) {
    if (a.index == index) return &a;
  }
  return nullptr;
}

const Attempt* TrajectoryBundle::solved_attempt() const {
  return solved_at ? attempt_by_index(*solved_at) : nullptr;
}

void validate(const TrajectoryBundle& bundle) {
  const std::string where = "bundle '" + bundle.task_id + "'";
  if (bundle.task_id.empty()) {
    throw Error(ErrorCode::MissingField, "task_id is empty");
  }
  int prev_index = 0;
  for (std::size_t i = 0; i < bundle.attempts.size(); ++i) {
    const auto& a = bundle.attempts[i];
    const std::string at = where + " attempts[" + std::to_string(i) + "]";
    if (a.index < 1) {
      throw Error(ErrorCode::MalformedAttempt, at + ".index must be >= 1");
    }
    if (a.index <= prev_index) {
      throw Error(ErrorCode::InvariantViolation,
                  at + ".index is not strictly increasing");
    }
    prev_index = a.index;
    if (!(a.reward >= 0.0 && a.reward <= 1.0)) {
      throw Error(ErrorCode::MalformedAttempt, at + ".reward outside [0,1]");
    }
    if (a.wall_time_sec && !(*a.wall_time_sec >= 0.0)) {
      throw Error(ErrorCode::MalformedAttempt, at + ".wall_time_sec negative");
    }
    std::set<std::string> names;
    for (const auto& t : a.test_summary) {
      if (!names.insert(t.name).second) {
        throw Error(ErrorCode::MalformedAttempt,
                    at + ".test_summary has duplicate name '" + t.name + "'");
      }
    }
  }
  if (bundle.memos.size() > bundle.attempts.size()) {
    throw Error(ErrorCode::InvariantViolation,
                where + ": more memos than attempts");
  }
  if (bundle.solved_at) {
    const Attempt* solved = bundle.solved_attempt();
    if (!solved) {
      throw Error(ErrorCode::InvariantViolation,
                  where + ".solved_at names a missing attempt");
    }
    if (solved->reward < 1.0) {
      throw Error(ErrorCode::InvariantViolation,
                  where + ".solved_at attempt has reward < 1.0");
    }
    if (static_cast<int>(bundle.memos.size()) >= *bundle.solved_at) {
      throw Error(ErrorCode::InvariantViolation,
                  where + ": a memo exists for the solved attempt");
    }
  }
  std::set<std::pair<std::string, Condition>> keys;
  for (const auto& e : bundle.evaluations) {
    if (!(e.reward >= 0.0 && e.reward <= 1.0)) {
      throw Error(ErrorCode::InvariantViolation,
                  where + ": evaluation reward outside [0,1] for model '" +
                      e.model_id + "'");
    }
    if (e.task_id != bundle.task_id) {
      throw Error(ErrorCode::InvariantViolation,
                  where + ": evaluation task_id mismatch");
    }
    if (!keys.insert({e.model_id, e.condition}).second) {
      throw Error(ErrorCode::InvariantViolation,
                  where + ": duplicate evaluation for model '" + e.model_id +
                      "' condition '" + std::string(condition_name(e.condition)) +
                      "'");
    }
  }
}

}  // namespace pdi
