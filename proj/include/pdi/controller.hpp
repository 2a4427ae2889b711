#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pdi/textstats.hpp"
#include "pdi/trajectory.hpp"

namespace pdi {

struct ComponentStats {
  double mean = 0.5;
  double std = 0.25;
};

struct ReferenceStats {
  ComponentStats exec;
  ComponentStats plan;
  ComponentStats oss;
};

struct ControllerConfig {
  double tau = -0.5;
  int warmup_W = 2;
  ReferenceStats reference_stats;
  double alpha = 0.002;
  TokenizerConfig tokenizer;
};

// Throws InvalidArgument unless warmup_W >= 1 and every reference std > 0.
void validate(const ControllerConfig& config);

enum class TriggerLevel { None, Soft, Strong };
std::string_view trigger_name(TriggerLevel t);

struct Directive {
  TriggerLevel kind = TriggerLevel::None;
  bool withhold_next_strategy = false;
  std::vector<std::string> anchor_sections;

  bool operator==(const Directive&) const = default;
};

Directive make_directive(TriggerLevel kind);

struct InterventionState {
  int step_k = 0;
  std::vector<double> proxy_history;  // d_hat per step
  TriggerLevel last_trigger = TriggerLevel::None;
  int consecutive_below = 0;

  bool operator==(const InterventionState&) const = default;
};

struct StepComponents {
  double phi_exec = 0.0;
  double phi_plan = 0.0;
  double phi_oss = 0.0;
  bool has_history = false;
  double raw_pdi = 0.0;
};

// Step-level stand-ins for the offline components:
//   exec: commands_k vs the memo's Commands section
//   plan: previous vs current Next Strategy (0 without a previous memo)
//   oss:  half facts stability, half failed-test stability (0 without one)
// A missing tests_prev is treated as an empty test set.
StepComponents step_components(const Memo& memo_k, const Memo* memo_prev,
                               std::span<const std::string> commands_k,
                               const TestSummary& tests_k, const TestSummary* tests_prev,
                               const ControllerConfig& config);

double step_proxy_pdi(const Memo& memo_k, const Memo* memo_prev,
                      std::span<const std::string> commands_k, const TestSummary& tests_k,
                      const TestSummary* tests_prev, const ControllerConfig& config);

double warmup_weight(int k, int warmup_W);

struct ControllerEvent {
  int step = 0;
  double raw_pdi = 0.0;
  double weight = 0.0;
  double d_hat = 0.0;
  TriggerLevel trigger = TriggerLevel::None;
};

struct Observation {
  InterventionState state;
  Directive directive;
  ControllerEvent event;
};

// Advances the state by one step. A strong trigger resets the
// consecutive-below counter, so the next sub-threshold step is soft again.
Observation observe(const InterventionState& state, double raw_pdi_k,
                    const ControllerConfig& config);

struct DirectedMemo {
  Memo memo;
  std::vector<std::string> annotations;
};

// Strong: Next Strategy cleared and raw_text re-rendered. Soft: memo
// untouched. Both record an annotation; None records nothing.
DirectedMemo apply_directive(const Directive& directive, const Memo& memo);

// One JSON object per line: step, raw_pdi, weight, d_hat, trigger.
std::string event_json_line(const ControllerEvent& event);

// Per-component mean and population std of the step components replayed
// over completed bundles. Plan and oss use only steps with a previous memo.
// Throws DegenerateCohort when a component has < 2 values or zero spread.
ReferenceStats calibrate(std::span<const TrajectoryBundle> bundles, double alpha,
                         const TokenizerConfig& tokenizer = {});

}  // namespace pdi
