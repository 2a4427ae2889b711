#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pdi/controller.hpp"
#include "pdi/trajectory.hpp"

namespace pdi {

struct TaskSpec {
  std::string task_id;
  std::string summary;
  std::string environment;
  std::string instruction;
};

// What the agent sees before an attempt.
struct Injection {
  int attempt = 1;
  std::string memo_text;  // empty before the first reflection
  std::vector<std::string> annotations;
  bool urgent = false;  // final attempt
  bool operator==(const Injection&) const = default;
};

struct AgentOutput {
  std::vector<std::string> commands;
  std::string stdout_text;
};

struct Judgement {
  double reward = 0.0;
  TestSummary tests;
};

struct ReflectRequest {
  int attempt = 1;
  const Memo* previous = nullptr;
  const AgentOutput* output = nullptr;
  const Judgement* judgement = nullptr;
  Directive directive;
};

enum class ChainCategory { Verify, Implement, Inspect, Prepare, Action };
std::string_view chain_category_name(ChainCategory c);

struct ChainEntry {
  std::size_t index = 0;  // position in the original command list
  std::string command;
  ChainCategory category = ChainCategory::Action;
  double score = 0.0;
  bool operator==(const ChainEntry&) const = default;
};

struct EvidenceBlocks {
  std::string task_pattern;
  std::vector<ChainEntry> execution_chain;
  std::vector<std::string> passed_tests;
  double final_reward = 0.0;
  std::vector<std::string> lessons;
  std::string environment;
  std::string raw_support_tail;
};

class AgentPort {
 public:
  virtual ~AgentPort() = default;
  virtual void reset(std::uint64_t /*seed*/) {}
  virtual AgentOutput execute(const TaskSpec& task, const Injection& injection) = 0;
};

class JudgePort {
 public:
  virtual ~JudgePort() = default;
  virtual Judgement judge(const TaskSpec& task, int attempt, const AgentOutput& output) = 0;
};

// Returns the full text of a rewritten memo.
class ReflectorPort {
 public:
  virtual ~ReflectorPort() = default;
  virtual std::string reflect(const TaskSpec& task, const ReflectRequest& request) = 0;
};

// Returns SKILL.md text.
class DistillerPort {
 public:
  virtual ~DistillerPort() = default;
  virtual std::string distill(const TaskSpec& task, const EvidenceBlocks& evidence) = 0;
};

struct Ports {
  AgentPort& agent;
  JudgePort& judge;
  ReflectorPort& reflector;
  DistillerPort& distiller;
};

struct CommandKeywords {
  ChainCategory category;
  double weight;
  std::vector<std::string> keywords;  // phrases with a space match as substrings
};

struct CommandChainConfig {
  // Checked in order; the first category with a hit wins.
  std::vector<CommandKeywords> table = default_table();
  double action_weight = 2.0;
  double extra_hit_bonus = 0.5;
  std::vector<std::string> low_signal = {"ls", "pwd", "echo", "clear", "true", "whoami", "date"};

  static std::vector<CommandKeywords> default_table();
};

// Classifies, scores and filters commands; keeps the top k by score (ties
// keep the earlier command) and returns them in execution order.
std::vector<ChainEntry> command_chain(std::span<const std::string> commands, std::size_t k = 12,
                                      const CommandChainConfig& config = {});

// One line per category present: "Verify x2: pytest -q; ...".
std::string summarize_chain(std::span<const ChainEntry> chain);

struct HarnessConfig {
  int n_max = 7;
  ControllerConfig controller;
  bool pdi_enabled = true;
  std::size_t tail_chars = 2000;
  std::size_t chain_k = 12;
  CommandChainConfig chain;
};

// Throws Unsolved when the bundle has no successful attempt.
EvidenceBlocks assemble_evidence(const TaskSpec& task, const TrajectoryBundle& bundle,
                                 const HarnessConfig& config = {});

// Markdown rendering of the six blocks, as handed to a distiller.
std::string render_evidence(const EvidenceBlocks& evidence);

struct RunResult {
  TrajectoryBundle bundle;
  std::vector<ControllerEvent> events;
  std::vector<Injection> injections;
};

// Execute, judge, then distill on success or reflect on failure, with the
// proxy controller observing each reflection when pdi_enabled. Throws
// PortContractViolation when a port breaks its contract.
RunResult run_task(const TaskSpec& task, Ports ports, const HarnessConfig& config,
                   std::uint64_t seed);

// JSON lines, one event per line.
std::string event_log(std::span<const ControllerEvent> events);

}  // namespace pdi
