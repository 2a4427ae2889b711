#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pdi {

struct TestResult {
  std::string name;
  bool passed = false;

  bool operator==(const TestResult&) const = default;
};

using TestSummary = std::vector<TestResult>;

// One execution attempt of the teacher agent.
struct Attempt {
  int index = 1;  // 1-based
  std::vector<std::string> commands;
  std::string stdout_text;
  double reward = 0.0;
  TestSummary test_summary;
  std::optional<double> wall_time_sec;

  bool operator==(const Attempt&) const = default;
};

// Five-section exploration memo rewritten after every failed attempt.
struct Memo {
  int attempt_count_header = 0;
  std::vector<std::string> attempts_log;
  std::vector<std::string> commands;
  std::vector<std::string> verified_facts;
  std::string current_error_pattern;
  std::string next_strategy;
  std::string raw_text;

  bool operator==(const Memo&) const = default;

  // Compares the parsed sections only, ignoring raw_text.
  bool same_sections(const Memo& other) const;
};

struct SkillSection {
  std::string heading;
  int level = 1;
  std::string text;

  bool operator==(const SkillSection&) const = default;
};

struct SkillDocument {
  std::map<std::string, std::string> frontmatter;
  // Verbatim frontmatter block including both `---` fences; empty when the
  // document has none. frontmatter_text + body_text is the source text.
  std::string frontmatter_text;
  std::string body_text;
  std::vector<SkillSection> sections;
  std::vector<std::string> code_blocks;
  int numbered_step_count = 0;

  std::string source_text() const { return frontmatter_text + body_text; }

  bool operator==(const SkillDocument&) const = default;
};

enum class Condition { Baseline, GeneratedSkill, HumanSkill };

std::string_view condition_name(Condition c);
std::optional<Condition> parse_condition(std::string_view name);

struct EvaluationRecord {
  std::string task_id;
  std::string model_id;
  Condition condition = Condition::Baseline;
  double reward = 0.0;

  bool operator==(const EvaluationRecord&) const = default;
};

enum class ModeLabel { InteractionFree, Iterative };

std::string_view mode_label_name(ModeLabel m);

struct TrajectoryBundle {
  std::string task_id;
  std::vector<Attempt> attempts;
  std::vector<Memo> memos;  // memos[i] follows the failure of attempts[i]
  std::optional<SkillDocument> skill;
  std::optional<int> solved_at;
  std::vector<EvaluationRecord> evaluations;

  bool operator==(const TrajectoryBundle&) const = default;

  // Derived: interaction-free iff solved on attempt 1 with no memos.
  std::optional<ModeLabel> mode_label() const;

  const Attempt* attempt_by_index(int index) const;
  const Attempt* solved_attempt() const;
};

// Throws pdi::Error (InvariantViolation / MalformedAttempt) naming the
// offending field when any type invariant does not hold.
void validate(const TrajectoryBundle& bundle);

}  // namespace pdi
