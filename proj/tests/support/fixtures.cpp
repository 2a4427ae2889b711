#include "fixtures.hpp"

#include <atomic>
#include <unistd.h>

#include "pdi/bundle_io.hpp"
#include "pdi/parsers.hpp"

namespace fs = std::filesystem;

namespace pdi::fixtures {
namespace {

const std::vector<std::string> kWords = {
    "parser",  "schema",   "offset",  "header", "unicode", "timeout", "column",  "encoding",
    "index",   "buffer",   "volume",  "mesh",   "units",   "codebook", "mapping", "threshold",
    "fixture", "tolerance", "rounding", "locale", "sorted", "merge",    "cache",   "retry",
    "config",  "manifest", "checksum", "vector", "matrix", "histogram"};

const std::vector<std::string> kCommands = {
    "ls",
    "pwd",
    "pytest -q",
    "pytest tests/test_core.py -k offset",
    "cat config.yaml",
    "head -n 20 data/input.csv",
    "cat > solve.py",
    "sed -i s/old/new/ solve.py",
    "python solve.py",
    "pip install numpy",
    "mkdir -p out",
    "grep -n error run.log",
    "echo done",
    "diff out/result.json expected.json"};

const std::vector<std::string> kTests = {"test_parse", "test_schema", "test_output",
                                         "test_units"};

std::size_t pick(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

const std::string& word(std::mt19937_64& rng) { return kWords[pick(rng, kWords.size())]; }

std::string words(std::mt19937_64& rng, std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + word(rng);
  return s;
}

std::string error_text(std::mt19937_64& rng) {
  switch (pick(rng, 4)) {
    case 0: return "`" + word(rng) + "` raised KeyError at line " + std::to_string(pick(rng, 400));
    case 1: return words(rng, 3) + " mismatch in src/" + word(rng) + ".py";
    case 2: return words(rng, 4);
    default: return "expected " + std::to_string(pick(rng, 90)) + " rows, got " +
                    std::to_string(pick(rng, 90)) + " (" + word(rng) + ")";
  }
}

std::string fact_text(std::mt19937_64& rng) {
  switch (pick(rng, 4)) {
    case 0: return word(rng) + " is not sorted";
    case 1: return word(rng) + " never changes";
    case 2: return words(rng, 2) + " works";
    default: return word(rng) + " has " + std::to_string(pick(rng, 500)) + " entries";
  }
}

std::string skill_text(std::mt19937_64& rng, const std::string& task_id) {
  std::string s = "---\nname: " + task_id + "\ndescription: " + words(rng, 4) + "\n---\n";
  s += "# " + task_id + "\n\n" + words(rng, 8) + "\n\n## Steps\n";
  const std::size_t steps = 1 + pick(rng, 5);
  for (std::size_t i = 1; i <= steps; ++i) s += std::to_string(i) + ". " + words(rng, 5) + "\n";
  if (pick(rng, 2) == 0) {
    s += "\n## Example\n```bash\n1. not a step\npytest -q\n" + words(rng, 3) + "\n```\n";
  }
  s += "\n## Pitfalls\n- " + words(rng, 6) + "\n- " + words(rng, 4) + "\n";
  return s;
}

TestSummary random_tests(std::mt19937_64& rng, bool all_pass) {
  TestSummary t;
  const std::size_t n = 2 + pick(rng, 3);
  for (std::size_t i = 0; i < n; ++i) t.push_back({kTests[i], all_pass || pick(rng, 2) == 0});
  return t;
}

}  // namespace

Memo make_memo(int k, std::vector<std::string> log, std::vector<std::string> commands,
               std::vector<std::string> facts, std::string error, std::string strategy) {
  Memo m;
  m.attempt_count_header = k;
  m.attempts_log = std::move(log);
  m.commands = std::move(commands);
  m.verified_facts = std::move(facts);
  m.current_error_pattern = std::move(error);
  m.next_strategy = std::move(strategy);
  return parse_memo(render_memo(m), true).value;
}

SkillDocument make_skill(std::string_view text) { return parse_skill(text, true).value; }

TrajectoryBundle random_bundle(std::mt19937_64& rng, const std::string& task_id, int attempts,
                               bool solved) {
  TrajectoryBundle b;
  b.task_id = task_id;
  std::vector<std::string> log;
  std::vector<std::string> facts;
  std::string strategy = words(rng, 5);
  for (int k = 1; k <= attempts; ++k) {
    Attempt a;
    a.index = k;
    const std::size_t n_cmd = 1 + pick(rng, 6);
    for (std::size_t c = 0; c < n_cmd; ++c) a.commands.push_back(kCommands[pick(rng, kCommands.size())]);
    const std::size_t lines = 1 + pick(rng, 6);
    for (std::size_t l = 0; l < lines; ++l) a.stdout_text += words(rng, 1 + pick(rng, 8)) + "\n";
    const bool success = solved && k == attempts;
    a.reward = success ? 1.0 : static_cast<double>(pick(rng, 5)) / 10.0;
    if (!success && k > 1 && pick(rng, 3) == 0) {
      a.test_summary = b.attempts.back().test_summary;
    } else {
      a.test_summary = random_tests(rng, success);
    }
    b.attempts.push_back(a);
    if (success) break;

    log.push_back("Attempt " + std::to_string(k) + ": " + words(rng, 4));
    if (pick(rng, 3) != 0) facts.push_back(fact_text(rng));
    if (pick(rng, 3) == 0) strategy = words(rng, 5);  // otherwise keep, so pivots vary
    b.memos.push_back(make_memo(k, log, a.commands, facts, error_text(rng), strategy));
  }
  if (solved) {
    b.solved_at = attempts;
    b.skill = make_skill(skill_text(rng, task_id));
  }
  return b;
}

std::vector<TrajectoryBundle> synthetic_cohort(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::vector<TrajectoryBundle> out;
  for (std::size_t i = 0; i < n; ++i) {
    const int attempts = i % 7 == 3 ? 2 : 2 + static_cast<int>(pick(rng, 5));
    out.push_back(random_bundle(rng, "syn-" + std::to_string(i), attempts, true));
  }
  return out;
}

std::vector<TrajectoryBundle> fixture_corpus() {
  std::mt19937_64 rng(7);
  struct Plan {
    int attempts;
    bool solved;
  };
  const Plan plans[] = {{1, true}, {1, true}, {2, true}, {3, true}, {4, true},
                        {5, true}, {3, true}, {6, true}, {7, false}, {3, false}};
  const std::vector<std::string> models = {"m-alpha", "m-beta", "m-gamma"};
  const double levels[] = {0.0, 0.0, 0.5, 1.0};
  std::vector<TrajectoryBundle> out;
  int id = 1;
  for (const auto& p : plans) {
    const std::string task = std::string("task-") + (id < 10 ? "0" : "") + std::to_string(id);
    ++id;
    auto b = random_bundle(rng, task, p.attempts, p.solved);
    for (const auto& m : models) {
      b.evaluations.push_back({task, m, Condition::Baseline, levels[pick(rng, 4)]});
      b.evaluations.push_back({task, m, Condition::GeneratedSkill, levels[pick(rng, 4)]});
      b.evaluations.push_back({task, m, Condition::HumanSkill, levels[pick(rng, 4)]});
    }
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<TrajectoryBundle> alpha_invariant_cohort() {
  const std::vector<std::string> skill_tokens = {"alpha", "bravo", "charlie", "delta", "echo"};
  const std::vector<std::string> filler = {"kilo", "lima", "mike", "november", "oscar"};
  const std::string skill_body = "alpha bravo charlie delta echo\n";
  std::vector<TrajectoryBundle> out;
  for (int j = 0; j <= 5; ++j) {
    TrajectoryBundle b;
    b.task_id = "inv-" + std::to_string(j);
    TestSummary failing = {{"test_a", false}, {"test_b", true}};
    b.attempts.push_back({1, {"ls"}, "out\n", 0.0, failing, {}});
    b.attempts.push_back({2, {"ls"}, "out\n", 0.0, failing, {}});
    std::vector<std::string> cmds;
    for (int t = 0; t < 5; ++t) cmds.push_back(t < j ? skill_tokens[t] : filler[t]);
    b.attempts.push_back({3, cmds, "ok\n", 1.0, {{"test_a", true}, {"test_b", true}}, {}});
    // Strategies and facts mention every filler token so all bundles share
    // one vocabulary.
    const std::string strategy = "kilo lima mike november oscar";
    const std::vector<std::string> facts = {"alpha kilo"};
    b.memos.push_back(make_memo(1, {"Attempt 1: ls"}, {"ls"}, facts, "wrong", strategy));
    b.memos.push_back(
        make_memo(2, {"Attempt 1: ls", "Attempt 2: ls"}, {"ls"}, facts, "wrong", strategy));
    b.solved_at = 3;
    b.skill = make_skill(skill_body);
    out.push_back(std::move(b));
  }
  return out;
}

void write_corpus(const std::vector<TrajectoryBundle>& bundles, const fs::path& dir) {
  fs::create_directories(dir);
  for (const auto& b : bundles) save_bundle(b, dir / b.task_id);
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("pdi-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

}  // namespace pdi::fixtures
