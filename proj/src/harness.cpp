#include "pdi/harness.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>
#include <set>

#include "pdi/errors.hpp"
#include "pdi/parsers.hpp"

namespace pdi {
namespace {

std::vector<std::string> words_of(std::string_view command) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : command) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || c == '_' || c == '-' || u >= 0x80) {
      cur += static_cast<char>(std::tolower(u));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::size_t keyword_hits(std::string_view command, const std::vector<std::string>& words,
                         const std::vector<std::string>& keywords) {
  std::size_t hits = 0;
  for (const auto& kw : keywords) {
    const bool phrase = kw.find_first_of(" >|") != std::string::npos;
    if (phrase) {
      if (command.find(kw) != std::string_view::npos) ++hits;
    } else if (std::find(words.begin(), words.end(), kw) != words.end()) {
      ++hits;
    }
  }
  return hits;
}

bool is_low_signal(std::string_view command, const std::vector<std::string>& low_signal) {
  const auto t = trim(command);
  if (t.empty()) return true;
  if (t.find_first_of(">|;&") != std::string_view::npos) return false;
  const auto first = t.substr(0, t.find_first_of(" \t"));
  return std::find(low_signal.begin(), low_signal.end(), first) != low_signal.end();
}

Error contract(const std::string& what) {
  return Error(ErrorCode::PortContractViolation, what);
}

}  // namespace

std::string_view chain_category_name(ChainCategory c) {
  switch (c) {
    case ChainCategory::Verify: return "Verify";
    case ChainCategory::Implement: return "Implement";
    case ChainCategory::Inspect: return "Inspect";
    case ChainCategory::Prepare: return "Prepare";
    case ChainCategory::Action: return "Action";
  }
  return "Action";
}

std::vector<CommandKeywords> CommandChainConfig::default_table() {
  return {
      {ChainCategory::Verify, 5.0,
       {"pytest", "unittest", "test", "tests", "verify", "check", "assert", "diff", "cmp",
        "validate"}},
      {ChainCategory::Implement, 4.0,
       {"cat >", "cat >>", "tee", "sed -i", "patch", "apply", "edit", "write", "cp", "mv"}},
      {ChainCategory::Prepare, 1.5,
       {"pip", "install", "apt-get", "apt", "npm", "conda", "mkdir", "cd", "export", "venv",
        "wget", "curl", "clone"}},
      {ChainCategory::Inspect, 1.0,
       {"cat", "head", "tail", "less", "find", "grep", "stat", "wc", "file", "which", "tree",
        "du", "ls"}},
  };
}

std::vector<ChainEntry> command_chain(std::span<const std::string> commands, std::size_t k,
                                      const CommandChainConfig& config) {
  std::vector<ChainEntry> scored;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    const auto& cmd = commands[i];
    if (is_low_signal(cmd, config.low_signal)) continue;
    const auto words = words_of(cmd);
    ChainEntry e{i, cmd, ChainCategory::Action, config.action_weight};
    for (const auto& row : config.table) {
      const std::size_t hits = keyword_hits(cmd, words, row.keywords);
      if (hits > 0) {
        e.category = row.category;
        e.score = row.weight + config.extra_hit_bonus * static_cast<double>(hits - 1);
        break;
      }
    }
    scored.push_back(std::move(e));
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const ChainEntry& a, const ChainEntry& b) { return a.score > b.score; });
  if (scored.size() > k) scored.resize(k);
  std::sort(scored.begin(), scored.end(),
            [](const ChainEntry& a, const ChainEntry& b) { return a.index < b.index; });
  return scored;
}

std::string summarize_chain(std::span<const ChainEntry> chain) {
  std::map<ChainCategory, std::vector<const ChainEntry*>> by;
  for (const auto& e : chain) by[e.category].push_back(&e);
  std::string out;
  for (const auto& [cat, entries] : by) {
    out += std::string(chain_category_name(cat)) + " x" + std::to_string(entries.size()) + ":";
    for (std::size_t i = 0; i < entries.size(); ++i) {
      out += (i == 0 ? " " : "; ") + entries[i]->command;
    }
    out += '\n';
  }
  return out;
}

EvidenceBlocks assemble_evidence(const TaskSpec& task, const TrajectoryBundle& bundle,
                                 const HarnessConfig& config) {
  const Attempt* solved = nullptr;
  for (const auto& a : bundle.attempts) {
    if (a.reward >= 1.0) {
      solved = &a;
      break;
    }
  }
  if (!solved) throw Error(ErrorCode::Unsolved, "no successful attempt for " + task.task_id);

  EvidenceBlocks ev;
  ev.task_pattern = task.summary;
  ev.execution_chain = command_chain(solved->commands, config.chain_k, config.chain);
  for (const auto& t : solved->test_summary) {
    if (t.passed) ev.passed_tests.push_back(t.name);
  }
  ev.final_reward = solved->reward;

  for (const auto& m : bundle.memos) {
    const auto& e = m.current_error_pattern;
    if (!e.empty() && std::find(ev.lessons.begin(), ev.lessons.end(), e) == ev.lessons.end()) {
      ev.lessons.push_back(e);
    }
  }
  std::map<std::string, std::vector<int>> failures;
  for (const auto& a : bundle.attempts) {
    if (&a == solved) break;
    for (const auto& t : a.test_summary) {
      if (!t.passed) failures[t.name].push_back(a.index);
    }
  }
  for (const auto& [name, attempts] : failures) {
    if (attempts.size() < 2) continue;
    std::string note = "repeated failure: " + name + " (attempts";
    for (std::size_t i = 0; i < attempts.size(); ++i) {
      note += (i == 0 ? " " : ", ") + std::to_string(attempts[i]);
    }
    ev.lessons.push_back(note + ")");
  }

  ev.environment = task.environment;
  const auto& out = solved->stdout_text;
  ev.raw_support_tail =
      out.size() > config.tail_chars ? out.substr(out.size() - config.tail_chars) : out;
  return ev;
}

std::string render_evidence(const EvidenceBlocks& ev) {
  std::string s = "## Task Pattern\n" + ev.task_pattern + "\n\n## Execution Chain\n";
  for (const auto& e : ev.execution_chain) {
    s += "- [" + std::string(chain_category_name(e.category)) + "] " + e.command + "\n";
  }
  s += "\n" + summarize_chain(ev.execution_chain);
  s += "\n## Verification\n";
  for (const auto& t : ev.passed_tests) s += "- passed: " + t + "\n";
  s += "- reward: " + std::to_string(ev.final_reward) + "\n";
  s += "\n## Lessons\n";
  for (const auto& l : ev.lessons) s += "- " + l + "\n";
  s += "\n## Environment\n" + ev.environment + "\n";
  s += "\n## Raw Support Tail\n" + ev.raw_support_tail + "\n";
  return s;
}

RunResult run_task(const TaskSpec& task, Ports ports, const HarnessConfig& config,
                   std::uint64_t seed) {
  if (config.n_max < 1) throw Error(ErrorCode::InvalidArgument, "N_max must be >= 1");
  if (config.pdi_enabled) validate(config.controller);

  RunResult run;
  auto& bundle = run.bundle;
  bundle.task_id = task.task_id;
  ports.agent.reset(seed);

  InterventionState state;
  Directive directive;  // carried into the next reflect/execute
  std::string injected_memo;
  std::vector<std::string> annotations;

  for (int k = 1; k <= config.n_max; ++k) {
    Injection inj{k, injected_memo, annotations, k == config.n_max};
    run.injections.push_back(inj);
    const AgentOutput output = ports.agent.execute(task, inj);
    const Judgement judgement = ports.judge.judge(task, k, output);
    if (!(judgement.reward >= 0.0 && judgement.reward <= 1.0)) {
      throw contract("judge reward outside [0, 1] on attempt " + std::to_string(k));
    }
    std::set<std::string> names;
    for (const auto& t : judgement.tests) {
      if (!names.insert(t.name).second) throw contract("judge repeated test '" + t.name + "'");
    }
    bundle.attempts.push_back(
        {k, output.commands, output.stdout_text, judgement.reward, judgement.tests, {}});

    if (judgement.reward >= 1.0) {
      bundle.solved_at = k;
      const auto evidence = assemble_evidence(task, bundle, config);
      const std::string text = ports.distiller.distill(task, evidence);
      try {
        bundle.skill = parse_skill(text, true).value;
      } catch (const Error& e) {
        throw contract("distiller output rejected: " + std::string(e.what()));
      }
      return run;
    }

    ReflectRequest req{k, bundle.memos.empty() ? nullptr : &bundle.memos.back(), &output,
                       &judgement, directive};
    const std::string memo_text = ports.reflector.reflect(task, req);
    Memo memo;
    try {
      memo = parse_memo(memo_text, true).value;
    } catch (const Error& e) {
      throw contract("reflector output rejected on attempt " + std::to_string(k) + ": " +
                     e.what());
    }
    bundle.memos.push_back(memo);

    directive = Directive{};
    if (config.pdi_enabled) {
      const std::size_t i = bundle.memos.size() - 1;
      const Memo* prev = i > 0 ? &bundle.memos[i - 1] : nullptr;
      const TestSummary* tests_prev = i > 0 ? &bundle.attempts[i - 1].test_summary : nullptr;
      const double raw = step_proxy_pdi(memo, prev, output.commands, judgement.tests,
                                        tests_prev, config.controller);
      auto obs = observe(state, raw, config.controller);
      state = std::move(obs.state);
      directive = obs.directive;
      run.events.push_back(obs.event);
    }
    auto directed = apply_directive(directive, memo);
    injected_memo = directed.memo.raw_text;
    annotations = std::move(directed.annotations);
  }
  return run;
}

std::string event_log(std::span<const ControllerEvent> events) {
  std::string out;
  for (const auto& e : events) out += event_json_line(e) + "\n";
  return out;
}

}  // namespace pdi
