#include "pdi/scripted.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

#include <json.hpp>

#include "pdi/bundle_io.hpp"
#include "pdi/errors.hpp"
#include "pdi/parsers.hpp"

namespace pdi {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(ErrorCode::MissingField, where + "." + key);
  }
  return j.at(key);
}

std::string string_field(const json& j, const char* key, const std::string& where) {
  const auto& v = field(j, key, where);
  if (!v.is_string()) throw Error(ErrorCode::InvalidArgument, where + "." + key + " not a string");
  return v.get<std::string>();
}

std::vector<std::string> string_list(const json& j, const char* key, const std::string& where) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  const auto& v = j.at(key);
  if (!v.is_array()) throw Error(ErrorCode::InvalidArgument, where + "." + key + " not a list");
  for (const auto& item : v) {
    if (!item.is_string()) {
      throw Error(ErrorCode::InvalidArgument, where + "." + key + " holds a non-string");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

ScriptedAttempt parse_attempt(const json& j, const std::string& where) {
  ScriptedAttempt a;
  a.commands = string_list(j, "commands", where);
  if (j.contains("stdout")) a.stdout_text = string_field(j, "stdout", where);
  const auto& r = field(j, "reward", where);
  if (!r.is_number()) throw Error(ErrorCode::InvalidArgument, where + ".reward not a number");
  a.reward = r.get<double>();
  if (!(a.reward >= 0.0 && a.reward <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, where + ".reward outside [0, 1]");
  }
  if (j.contains("tests")) {
    for (const auto& t : j.at("tests")) {
      a.tests.push_back({string_field(t, "name", where + ".tests"),
                         field(t, "passed", where + ".tests").get<bool>()});
    }
  }
  if (j.contains("memo")) {
    const auto& m = j.at("memo");
    const std::string mw = where + ".memo";
    if (m.contains("attempt_summary")) a.memo.attempt_summary = string_field(m, "attempt_summary", mw);
    a.memo.facts = string_list(m, "facts", mw);
    if (m.contains("error")) a.memo.error = string_field(m, "error", mw);
    if (m.contains("strategy")) a.memo.strategy = string_field(m, "strategy", mw);
  }
  return a;
}

std::vector<ScriptedAttempt> parse_script(const json& j, const char* key) {
  std::vector<ScriptedAttempt> out;
  if (!j.contains(key)) return out;
  const auto& list = j.at(key);
  if (!list.is_array()) throw Error(ErrorCode::InvalidArgument, std::string(key) + " not a list");
  for (std::size_t i = 0; i < list.size(); ++i) {
    out.push_back(parse_attempt(list[i], std::string(key) + "[" + std::to_string(i) + "]"));
  }
  return out;
}

ordered_json attempt_json(const ScriptedAttempt& a) {
  ordered_json j;
  j["commands"] = a.commands;
  j["stdout"] = a.stdout_text;
  j["reward"] = a.reward;
  j["tests"] = ordered_json::array();
  for (const auto& t : a.tests) j["tests"].push_back({{"name", t.name}, {"passed", t.passed}});
  j["memo"] = {{"attempt_summary", a.memo.attempt_summary},
               {"facts", a.memo.facts},
               {"error", a.memo.error},
               {"strategy", a.memo.strategy}};
  return j;
}

const ScriptedAttempt& entry(const std::vector<ScriptedAttempt>& script, std::size_t i) {
  return script[std::min(i, script.size() - 1)];
}

// Keeps embedded text from opening or closing a code fence.
std::string defuse_fences(std::string_view text) {
  std::string out;
  for (auto line : split_lines(text)) {
    std::string l(line);
    if (trim(l).substr(0, 3) == "```") l = "'''" + std::string(trim(l).substr(3));
    out += l + "\n";
  }
  return out;
}

}  // namespace

Scenario parse_scenario(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("scenario is not valid JSON: ") + e.what());
  }
  Scenario s;
  const auto& t = field(j, "task", "scenario");
  s.task.task_id = string_field(t, "task_id", "task");
  if (t.contains("summary")) s.task.summary = string_field(t, "summary", "task");
  if (t.contains("environment")) s.task.environment = string_field(t, "environment", "task");
  if (t.contains("instruction")) s.task.instruction = string_field(t, "instruction", "task");
  if (j.contains("n_max")) s.n_max = j.at("n_max").get<int>();
  if (s.n_max < 1) throw Error(ErrorCode::InvalidArgument, "n_max must be >= 1");
  if (j.contains("reflector")) {
    const auto mode = j.at("reflector").get<std::string>();
    if (mode == "scripted") {
      s.reflector = ReflectorMode::Scripted;
    } else if (mode == "stale") {
      s.reflector = ReflectorMode::Stale;
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown reflector mode '" + mode + "'");
    }
  }
  s.attempts = parse_script(j, "attempts");
  if (s.attempts.empty()) throw Error(ErrorCode::MissingField, "scenario.attempts");
  s.recovery = parse_script(j, "recovery");
  if (j.contains("seed_stdout")) s.seed_stdout = j.at("seed_stdout").get<bool>();
  return s;
}

std::string scenario_to_json(const Scenario& s) {
  ordered_json j;
  j["task"] = {{"task_id", s.task.task_id},
               {"summary", s.task.summary},
               {"environment", s.task.environment},
               {"instruction", s.task.instruction}};
  j["n_max"] = s.n_max;
  j["reflector"] = s.reflector == ReflectorMode::Stale ? "stale" : "scripted";
  j["seed_stdout"] = s.seed_stdout;
  j["attempts"] = ordered_json::array();
  for (const auto& a : s.attempts) j["attempts"].push_back(attempt_json(a));
  if (!s.recovery.empty()) {
    j["recovery"] = ordered_json::array();
    for (const auto& a : s.recovery) j["recovery"].push_back(attempt_json(a));
  }
  return j.dump(2) + "\n";
}

ScriptedWorld::ScriptedWorld(Scenario scenario) : scenario_(std::move(scenario)) {
  if (scenario_.attempts.empty()) throw Error(ErrorCode::MissingField, "scenario.attempts");
}

void ScriptedWorld::reset(std::uint64_t seed) {
  seed_ = seed;
  recovering_ = false;
  recovery_start_ = 0;
  current_ = nullptr;
  log_.clear();
}

AgentOutput ScriptedWorld::execute(const TaskSpec&, const Injection& injection) {
  const bool strong = std::any_of(
      injection.annotations.begin(), injection.annotations.end(),
      [](const std::string& a) { return a.rfind("strong", 0) == 0; });
  const auto k = static_cast<std::size_t>(injection.attempt);
  if (strong && !recovering_ && !scenario_.recovery.empty()) {
    recovering_ = true;
    recovery_start_ = k;
  }
  current_ = recovering_ ? &entry(scenario_.recovery, k - recovery_start_)
                         : &entry(scenario_.attempts, k - 1);
  AgentOutput out{current_->commands, current_->stdout_text};
  if (scenario_.seed_stdout) {
    std::mt19937_64 rng(seed_ ^ (0x9e3779b97f4a7c15ULL * k));
    char buf[32];
    std::snprintf(buf, sizeof buf, "run-id: %016llx\n", static_cast<unsigned long long>(rng()));
    out.stdout_text += buf;
  }
  return out;
}

Judgement ScriptedWorld::judge(const TaskSpec&, int, const AgentOutput&) {
  if (!current_) throw Error(ErrorCode::PortContractViolation, "judge called before execute");
  return {current_->reward, current_->tests};
}

std::string ScriptedWorld::reflect(const TaskSpec&, const ReflectRequest& req) {
  if (scenario_.reflector == ReflectorMode::Stale && req.previous) {
    return req.previous->raw_text;
  }
  const ScriptedMemo& sm = current_->memo;
  std::string summary = sm.attempt_summary.empty() ? "no progress" : sm.attempt_summary;
  log_.push_back("Attempt " + std::to_string(req.attempt) + ": " + summary + " (reward " +
                 format_decimal(req.judgement ? req.judgement->reward : 0.0) + ")");
  Memo m;
  m.attempt_count_header = req.attempt;
  m.attempts_log = log_;
  m.commands = req.output ? req.output->commands : std::vector<std::string>{};
  m.verified_facts = sm.facts;
  m.current_error_pattern = sm.error;
  m.next_strategy = sm.strategy;
  return render_memo(m);
}

std::string ScriptedWorld::distill(const TaskSpec& task, const EvidenceBlocks& ev) {
  std::string s = "---\nname: " + task.task_id + "\ndescription: " + task.summary + "\n---\n";
  s += "# " + task.task_id + "\n\n## Task Pattern\n" + defuse_fences(ev.task_pattern);
  s += "\n## Execution Chain\n";
  int step = 1;
  for (const auto& e : ev.execution_chain) {
    s += std::to_string(step++) + ". " + defuse_fences(e.command);
  }
  s += "\n## Verification\n";
  for (const auto& t : ev.passed_tests) s += "- " + t + " passes\n";
  s += "- reward " + format_decimal(ev.final_reward) + "\n";
  if (!ev.lessons.empty()) {
    s += "\n## Lessons\n";
    for (const auto& l : ev.lessons) s += "- " + defuse_fences(l);
  }
  s += "\n## Environment\n" + defuse_fences(ev.environment);
  s += "\n## Raw Support Tail\n```text\n" + defuse_fences(ev.raw_support_tail) + "```\n";
  return s;
}

Scenario random_scenario(std::uint64_t seed, int n_max) {
  std::mt19937_64 rng(seed);
  const auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  static const char* const verbs[] = {"pytest -q", "cat config.yaml", "sed -i s/a/b/ main.py",
                                      "python solve.py", "pip install numpy", "grep -n err log.txt",
                                      "ls", "mkdir -p out", "cat > out/result.json", "echo done"};
  static const char* const words[] = {"parser", "schema", "offset", "header", "unicode",
                                      "timeout", "column", "encoding", "index", "buffer"};

  Scenario s;
  s.task = {"rand-" + std::to_string(seed), "randomized scripted task", "python 3.11",
            "make the tests pass"};
  s.n_max = n_max;
  s.reflector = pick(4) == 0 ? ReflectorMode::Stale : ReflectorMode::Scripted;
  s.seed_stdout = pick(2) == 0;
  const int success_at = pick(2) == 0 ? static_cast<int>(1 + pick(n_max)) : 0;
  const int length = success_at > 0 ? success_at : static_cast<int>(1 + pick(n_max));
  for (int k = 1; k <= length; ++k) {
    ScriptedAttempt a;
    const std::size_t n_cmd = 1 + pick(6);
    for (std::size_t c = 0; c < n_cmd; ++c) a.commands.emplace_back(verbs[pick(10)]);
    a.stdout_text = "step " + std::to_string(k) + " " + words[pick(10)] + "\n";
    const bool success = k == success_at;
    a.reward = success ? 1.0 : static_cast<double>(pick(10)) / 10.0;
    for (int t = 0; t < 3; ++t) {
      a.tests.push_back({"test_" + std::string(words[t * 3]), success || pick(2) == 0});
    }
    a.memo.attempt_summary = std::string("tried ") + words[pick(10)];
    const std::size_t n_facts = pick(4);
    for (std::size_t f = 0; f < n_facts; ++f) {
      a.memo.facts.push_back(std::string(words[pick(10)]) + " is " + words[pick(10)]);
    }
    a.memo.error = std::string("`") + words[pick(10)] + "` mismatch at line " +
                   std::to_string(pick(100));
    a.memo.strategy = std::string("fix the ") + words[pick(10)] + " then " + words[pick(10)];
    s.attempts.push_back(std::move(a));
  }
  return s;
}

}  // namespace pdi
