#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pdi/harness.hpp"

namespace pdi {

struct ScriptedMemo {
  std::string attempt_summary;
  std::vector<std::string> facts;
  std::string error;
  std::string strategy;
};

struct ScriptedAttempt {
  std::vector<std::string> commands;
  std::string stdout_text;
  double reward = 0.0;
  TestSummary tests;
  ScriptedMemo memo;
};

enum class ReflectorMode { Scripted, Stale };

struct Scenario {
  TaskSpec task;
  int n_max = 7;
  ReflectorMode reflector = ReflectorMode::Scripted;
  // Attempt k plays attempts[k-1]; the last entry repeats past the end.
  std::vector<ScriptedAttempt> attempts;
  // After the agent first sees a strong directive it switches to this
  // script (from its first entry). Empty: keep following attempts.
  std::vector<ScriptedAttempt> recovery;
  // Appends a seed-derived run id to every stdout.
  bool seed_stdout = false;
};

// Throws MissingField / InvalidArgument naming the offending key.
Scenario parse_scenario(std::string_view json_text);
std::string scenario_to_json(const Scenario& scenario);

// Plays a scenario through all four ports. Scripted agent and judge share a
// cursor, so the judge scores the entry the agent just played.
class ScriptedWorld final : public AgentPort,
                            public JudgePort,
                            public ReflectorPort,
                            public DistillerPort {
 public:
  explicit ScriptedWorld(Scenario scenario);

  void reset(std::uint64_t seed) override;
  AgentOutput execute(const TaskSpec& task, const Injection& injection) override;
  Judgement judge(const TaskSpec& task, int attempt, const AgentOutput& output) override;
  std::string reflect(const TaskSpec& task, const ReflectRequest& request) override;
  std::string distill(const TaskSpec& task, const EvidenceBlocks& evidence) override;

  Ports ports() { return {*this, *this, *this, *this}; }
  const Scenario& scenario() const { return scenario_; }

 private:
  Scenario scenario_;
  std::uint64_t seed_ = 0;
  bool recovering_ = false;
  std::size_t recovery_start_ = 0;
  const ScriptedAttempt* current_ = nullptr;
  std::vector<std::string> log_;
};

// Random scenario with a pseudo-vocabulary of commands, tests and memo
// lines; about half of them eventually succeed.
Scenario random_scenario(std::uint64_t seed, int n_max = 7);

}  // namespace pdi
