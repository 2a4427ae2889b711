#include "pdi/controller.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "pdi/errors.hpp"
#include "pdi/parsers.hpp"
#include "pdi/pdi_engine.hpp"
#include "pdi/stats.hpp"

namespace pdi {
namespace {

std::string join_lines(std::span<const std::string> parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += '\n';
    out += parts[i];
  }
  return out;
}

// psi over the union vocabulary of one step. With no tokens at all every
// segment is identical (empty), so psi is 1.
struct StepVocab {
  VocabularyPtr vocab;
  double alpha;
  const TokenizerConfig& config;

  double text(std::string_view a, std::string_view b) const {
    if (!vocab) return 1.0;
    return similarity(distribution(a, vocab, alpha, config),
                      distribution(b, vocab, alpha, config));
  }
  double tokens(std::span<const std::string> a, std::span<const std::string> b) const {
    if (!vocab) return 1.0;
    return similarity(distribution_from_tokens(a, vocab, alpha),
                      distribution_from_tokens(b, vocab, alpha));
  }
};

double z(double value, const ComponentStats& s) { return (value - s.mean) / s.std; }

ComponentStats fit(const std::vector<double>& values, const char* name) {
  if (values.size() < 2) {
    throw Error(ErrorCode::DegenerateCohort,
                std::string("calibration needs >= 2 ") + name + " values");
  }
  const double var = population_variance(values);
  if (!(var > 0.0)) {
    throw Error(ErrorCode::DegenerateCohort,
                std::string("calibration ") + name + " values have zero spread");
  }
  return {mean(values), std::sqrt(var)};
}

}  // namespace

void validate(const ControllerConfig& config) {
  if (config.warmup_W < 1) {
    throw Error(ErrorCode::InvalidArgument, "warmup_W must be >= 1");
  }
  for (const auto* s : {&config.reference_stats.exec, &config.reference_stats.plan,
                        &config.reference_stats.oss}) {
    if (!(s->std > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "reference std must be > 0");
    }
  }
  if (!(config.alpha > 0.0)) {
    throw Error(ErrorCode::NonPositiveAlpha, "controller alpha must be > 0");
  }
}

std::string_view trigger_name(TriggerLevel t) {
  switch (t) {
    case TriggerLevel::None: return "none";
    case TriggerLevel::Soft: return "soft";
    case TriggerLevel::Strong: return "strong";
  }
  return "none";
}

Directive make_directive(TriggerLevel kind) {
  Directive d;
  d.kind = kind;
  if (kind == TriggerLevel::Strong) {
    d.withhold_next_strategy = true;
    d.anchor_sections = {std::string(kVerifiedFacts),
                         std::string(kCurrentErrorPattern)};
  }
  return d;
}

StepComponents step_components(const Memo& memo_k, const Memo* memo_prev,
                               std::span<const std::string> commands_k,
                               const TestSummary& tests_k, const TestSummary* tests_prev,
                               const ControllerConfig& config) {
  const auto& tc = config.tokenizer;
  const std::string cmds = join_lines(commands_k);
  const std::string memo_cmds = join_lines(memo_k.commands);
  const std::string facts_k = facts_text(memo_k);
  const auto failed_k = failed_test_tokens(tests_k);
  const std::vector<std::string> failed_prev =
      tests_prev ? failed_test_tokens(*tests_prev) : std::vector<std::string>{};

  std::vector<std::vector<std::string>> segments = {
      tokenize(cmds, tc), tokenize(memo_cmds, tc), tokenize(memo_k.next_strategy, tc),
      tokenize(facts_k, tc), failed_k};
  std::string facts_prev;
  if (memo_prev) {
    facts_prev = facts_text(*memo_prev);
    segments.push_back(tokenize(memo_prev->next_strategy, tc));
    segments.push_back(tokenize(facts_prev, tc));
    segments.push_back(failed_prev);
  }
  VocabularyPtr vocab;
  try {
    vocab = build_vocab_from_tokens(segments);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::EmptyCorpus) throw;
  }
  const StepVocab psi{vocab, config.alpha, tc};

  StepComponents c;
  c.phi_exec = psi.text(cmds, memo_cmds);
  if (memo_prev) {
    c.has_history = true;
    c.phi_plan = psi.text(memo_prev->next_strategy, memo_k.next_strategy);
    c.phi_oss = 0.5 * psi.text(facts_prev, facts_k) + 0.5 * psi.tokens(failed_prev, failed_k);
  }
  const auto& ref = config.reference_stats;
  const double z_exec = z(c.phi_exec, ref.exec);
  const double z_plan = c.has_history ? z(c.phi_plan, ref.plan) : 0.0;
  const double z_oss = c.has_history ? z(c.phi_oss, ref.oss) : 0.0;
  c.raw_pdi = z_exec - z_plan - z_oss;
  return c;
}

double step_proxy_pdi(const Memo& memo_k, const Memo* memo_prev,
                      std::span<const std::string> commands_k, const TestSummary& tests_k,
                      const TestSummary* tests_prev, const ControllerConfig& config) {
  return step_components(memo_k, memo_prev, commands_k, tests_k, tests_prev, config).raw_pdi;
}

double warmup_weight(int k, int warmup_W) {
  return std::min(1.0, static_cast<double>(k) / static_cast<double>(warmup_W));
}

Observation observe(const InterventionState& state, double raw_pdi_k,
                    const ControllerConfig& config) {
  Observation out;
  out.state = state;
  auto& s = out.state;
  s.step_k += 1;
  const double w = warmup_weight(s.step_k, config.warmup_W);
  const double d_hat = w * raw_pdi_k;
  s.proxy_history.push_back(d_hat);

  TriggerLevel level = TriggerLevel::None;
  if (d_hat < config.tau) {
    if (s.consecutive_below >= 1) {
      level = TriggerLevel::Strong;
      s.consecutive_below = 0;
    } else {
      level = TriggerLevel::Soft;
      s.consecutive_below = 1;
    }
  } else {
    s.consecutive_below = 0;
  }
  s.last_trigger = level;
  out.directive = make_directive(level);
  out.event = {s.step_k, raw_pdi_k, w, d_hat, level};
  return out;
}

DirectedMemo apply_directive(const Directive& directive, const Memo& memo) {
  DirectedMemo out{memo, {}};
  switch (directive.kind) {
    case TriggerLevel::None:
      break;
    case TriggerLevel::Soft:
      out.annotations.emplace_back("soft: reconsider the current approach");
      break;
    case TriggerLevel::Strong: {
      if (!out.memo.next_strategy.empty()) {
        out.memo.next_strategy.clear();
        out.memo.raw_text = render_memo(out.memo);
      }
      std::string note = "strong: anchor on";
      for (std::size_t i = 0; i < directive.anchor_sections.size(); ++i) {
        note += (i == 0 ? " " : ", ") + directive.anchor_sections[i];
      }
      out.annotations.push_back(std::move(note));
      break;
    }
  }
  return out;
}

std::string event_json_line(const ControllerEvent& event) {
  nlohmann::ordered_json j;
  j["step"] = event.step;
  j["raw_pdi"] = event.raw_pdi;
  j["weight"] = event.weight;
  j["d_hat"] = event.d_hat;
  j["trigger"] = std::string(trigger_name(event.trigger));
  return j.dump();
}

ReferenceStats calibrate(std::span<const TrajectoryBundle> bundles, double alpha,
                         const TokenizerConfig& tokenizer) {
  ControllerConfig config;
  config.alpha = alpha;
  config.tokenizer = tokenizer;
  std::vector<double> exec, plan, oss;
  for (const auto& b : bundles) {
    const std::size_t m = std::min(b.memos.size(), b.attempts.size());
    for (std::size_t i = 0; i < m; ++i) {
      const Memo* prev = i > 0 ? &b.memos[i - 1] : nullptr;
      const TestSummary* tests_prev = i > 0 ? &b.attempts[i - 1].test_summary : nullptr;
      const auto c = step_components(b.memos[i], prev, b.attempts[i].commands,
                                     b.attempts[i].test_summary, tests_prev, config);
      exec.push_back(c.phi_exec);
      if (c.has_history) {
        plan.push_back(c.phi_plan);
        oss.push_back(c.phi_oss);
      }
    }
  }
  return {fit(exec, "exec"), fit(plan, "plan"), fit(oss, "oss")};
}

}  // namespace pdi
