#include "pdi/features.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

#include "pdi/errors.hpp"
#include "pdi/parsers.hpp"
#include "pdi/stats.hpp"

namespace pdi {
namespace {

constexpr std::array<FeatureSpec, kFeatureCount> kSpecs = {{
    {"compression_ratio", FeatureGroup::ExplorationDynamics},
    {"reward_variance", FeatureGroup::ExplorationDynamics},
    {"first_retry_gain", FeatureGroup::ExplorationDynamics},
    {"strategy_pivot_count", FeatureGroup::ExplorationDynamics},
    {"error_shift_count", FeatureGroup::ExplorationDynamics},
    {"memo_entropy", FeatureGroup::MemoQuality},
    {"memo_growth_rate", FeatureGroup::MemoQuality},
    {"negation_fact_count", FeatureGroup::MemoQuality},
    {"final_fact_count", FeatureGroup::MemoQuality},
    {"fact_accrual", FeatureGroup::MemoQuality},
    {"error_specificity", FeatureGroup::MemoQuality},
    {"skill_section_count", FeatureGroup::SkillStructure},
    {"skill_step_count", FeatureGroup::SkillStructure},
    {"skill_cmd_length_ratio", FeatureGroup::SkillStructure},
    {"skill_lexical_density", FeatureGroup::NonPredictive},
    {"skill_code_ratio", FeatureGroup::NonPredictive},
    {"final_memo_similarity", FeatureGroup::NonPredictive},
    {"trigram_novelty", FeatureGroup::NonPredictive},
    {"cumulative_info_gain", FeatureGroup::NonPredictive},
    {"test_stuck_ratio", FeatureGroup::NonPredictive},
    {"memo_action_items", FeatureGroup::NonPredictive},
    {"skill_memo_overlap", FeatureGroup::NonPredictive},
    {"skill_cmd_overlap", FeatureGroup::NonPredictive},
}};

std::string join_lines(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += '\n';
    out += parts[i];
  }
  return out;
}

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_' ||
         static_cast<unsigned char>(c) >= 0x80;
}

bool is_path_like(std::string_view w) {
  for (std::size_t i = 1; i + 1 < w.size(); ++i) {
    if ((w[i] == '/' || w[i] == '.') && is_word_char(w[i - 1]) && is_word_char(w[i + 1])) {
      return true;
    }
  }
  return false;
}

std::string_view strip_punct(std::string_view w) {
  const auto keep = [](char c) { return is_word_char(c); };
  std::size_t b = 0;
  while (b < w.size() && !keep(w[b])) ++b;
  std::size_t e = w.size();
  while (e > b && !keep(w[e - 1])) --e;
  return w.substr(b, e - b);
}

std::size_t pivots(const std::vector<std::string>& texts, double threshold,
                   const TokenizerConfig& tc) {
  std::size_t n = 0;
  for (std::size_t i = 1; i < texts.size(); ++i) {
    if (jaccard(texts[i - 1], texts[i], tc) < threshold) ++n;
  }
  return n;
}

TestSummary sorted_summary(TestSummary s) {
  std::sort(s.begin(), s.end(), [](const TestResult& a, const TestResult& b) {
    return a.name != b.name ? a.name < b.name : a.passed < b.passed;
  });
  return s;
}

std::optional<double> mean_command_length(const TrajectoryBundle& b) {
  const Attempt* solved = b.solved_attempt();
  if (!solved || solved->commands.empty()) return std::nullopt;
  double total = 0.0;
  for (const auto& c : solved->commands) total += static_cast<double>(c.size());
  return total / static_cast<double>(solved->commands.size());
}

}  // namespace

std::string_view feature_group_name(FeatureGroup g) {
  switch (g) {
    case FeatureGroup::ExplorationDynamics: return "exploration_dynamics";
    case FeatureGroup::MemoQuality: return "memo_quality";
    case FeatureGroup::SkillStructure: return "skill_structure";
    case FeatureGroup::NonPredictive: return "non_predictive";
  }
  return "non_predictive";
}

const std::array<FeatureSpec, kFeatureCount>& feature_specs() { return kSpecs; }

std::size_t feature_index(std::string_view id) {
  for (std::size_t i = 0; i < kSpecs.size(); ++i) {
    if (kSpecs[i].id == id) return i;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown feature id '" + std::string(id) + "'");
}

void FeatureVector::merge(const FeatureVector& other) {
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (other.values_[i]) values_[i] = other.values_[i];
  }
}

Specificity error_specificity(std::string_view text) {
  Specificity s;
  std::string rest;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '`') {
      const std::size_t close = text.find('`', i + 1);
      if (close != std::string_view::npos) {
        ++s.words;
        ++s.concrete;
        rest += ' ';
        i = close + 1;
        continue;
      }
    }
    rest += text[i++];
  }
  std::size_t p = 0;
  while (p < rest.size()) {
    while (p < rest.size() && std::isspace(static_cast<unsigned char>(rest[p]))) ++p;
    std::size_t q = p;
    while (q < rest.size() && !std::isspace(static_cast<unsigned char>(rest[q]))) ++q;
    const auto word = strip_punct(std::string_view(rest).substr(p, q - p));
    if (!word.empty()) {
      ++s.words;
      const bool digit = std::any_of(word.begin(), word.end(), [](char c) {
        return std::isdigit(static_cast<unsigned char>(c)) != 0;
      });
      if (digit || is_path_like(word)) ++s.concrete;
    }
    p = q;
  }
  return s;
}

std::size_t count_action_items(std::string_view text) {
  static const std::regex item(R"(^\s*([-*]|\d+[.)])\s)");
  std::size_t n = 0;
  for (auto line : split_lines(text)) {
    const std::string l(line);
    if (std::regex_search(l, item)) ++n;
  }
  return n;
}

FeatureVector exploration_dynamics(const TrajectoryBundle& b, const FeatureConfig& config) {
  FeatureVector f;
  if (b.skill) {
    const double skill_len = static_cast<double>(b.skill->source_text().size());
    if (skill_len > 0.0) {
      double out_len = 0.0;
      for (const auto& a : b.attempts) out_len += static_cast<double>(a.stdout_text.size());
      f.set("compression_ratio", out_len / skill_len);
    }
  }
  if (b.attempts.size() >= 2) {
    std::vector<double> rewards;
    for (const auto& a : b.attempts) rewards.push_back(a.reward);
    f.set("reward_variance", population_variance(rewards));
    f.set("first_retry_gain", b.attempts[1].reward - b.attempts[0].reward);
  }
  if (b.memos.size() >= 2) {
    std::vector<std::string> strategies, errors;
    for (const auto& m : b.memos) {
      strategies.push_back(m.next_strategy);
      errors.push_back(m.current_error_pattern);
    }
    f.set("strategy_pivot_count",
          static_cast<double>(pivots(strategies, config.pivot_threshold, config.tokenizer)));
    f.set("error_shift_count",
          static_cast<double>(pivots(errors, config.pivot_threshold, config.tokenizer)));
  }
  return f;
}

FeatureVector memo_quality(const TrajectoryBundle& b, const FeatureConfig& config) {
  FeatureVector f;
  const auto& memos = b.memos;
  if (memos.empty()) return f;
  const auto& tc = config.tokenizer;

  double h = 0.0;
  for (const auto& m : memos) h += entropy(m.raw_text, tc);
  f.set("memo_entropy", h / static_cast<double>(memos.size()));

  const double first_len = static_cast<double>(memos.front().raw_text.size());
  if (first_len > 0.0) {
    f.set("memo_growth_rate",
          (static_cast<double>(memos.back().raw_text.size()) - first_len) / first_len);
  }

  std::size_t negations = 0;
  for (const auto& fact : memos.back().verified_facts) {
    const auto tokens = tokenize(fact, tc);
    const bool hit = std::any_of(tokens.begin(), tokens.end(), [&](const std::string& t) {
      return std::find(config.negation_keywords.begin(), config.negation_keywords.end(), t) !=
             config.negation_keywords.end();
    });
    if (hit) ++negations;
  }
  f.set("negation_fact_count", static_cast<double>(negations));
  f.set("final_fact_count", static_cast<double>(memos.back().verified_facts.size()));

  if (memos.size() >= 2) {
    const double delta = static_cast<double>(memos.back().verified_facts.size()) -
                         static_cast<double>(memos.front().verified_facts.size());
    f.set("fact_accrual", delta / static_cast<double>(memos.size() - 1));
  }

  double ratio_sum = 0.0;
  std::size_t counted = 0;
  for (const auto& m : memos) {
    const auto s = error_specificity(m.current_error_pattern);
    if (s.words == 0) continue;
    ratio_sum += static_cast<double>(s.concrete) / static_cast<double>(s.words);
    ++counted;
  }
  if (counted > 0) f.set("error_specificity", ratio_sum / static_cast<double>(counted));
  return f;
}

FeatureVector skill_structure(const TrajectoryBundle& b, const FeatureConfig&) {
  FeatureVector f;
  if (!b.skill) return f;
  f.set("skill_section_count", static_cast<double>(b.skill->sections.size()));
  f.set("skill_step_count", static_cast<double>(b.skill->numbered_step_count));
  const auto mean_len = mean_command_length(b);
  if (mean_len && *mean_len > 0.0) {
    f.set("skill_cmd_length_ratio",
          static_cast<double>(b.skill->source_text().size()) / *mean_len);
  }
  return f;
}

FeatureVector non_predictive_controls(const TrajectoryBundle& b, const FeatureConfig& config) {
  FeatureVector f;
  const auto& tc = config.tokenizer;
  const auto& memos = b.memos;

  if (b.skill) {
    const std::string s = b.skill->source_text();
    const auto tokens = tokenize(s, tc);
    if (!tokens.empty()) {
      auto unique = tokens;
      std::sort(unique.begin(), unique.end());
      unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
      f.set("skill_lexical_density",
            static_cast<double>(unique.size()) / static_cast<double>(tokens.size()));
    }
    if (!s.empty()) {
      double code = 0.0;
      for (const auto& block : b.skill->code_blocks) code += static_cast<double>(block.size());
      f.set("skill_code_ratio", code / static_cast<double>(s.size()));
    }
    if (!memos.empty()) f.set("skill_memo_overlap", jaccard(s, memos.back().raw_text, tc));
    if (const Attempt* solved = b.solved_attempt()) {
      f.set("skill_cmd_overlap", jaccard(s, join_lines(solved->commands), tc));
    }
  }

  if (memos.size() >= 2) {
    f.set("final_memo_similarity",
          jaccard(memos[memos.size() - 2].raw_text, memos.back().raw_text, tc));
  }
  if (!memos.empty()) {
    double total = 0.0;
    std::string_view prev;
    for (const auto& m : memos) {
      total += ngram_novelty(prev, m.raw_text, config.novelty_order, tc);
      prev = m.raw_text;
    }
    f.set("trigram_novelty", total / static_cast<double>(memos.size()));
    f.set("cumulative_info_gain", total);

    double items = 0.0;
    for (const auto& m : memos) items += static_cast<double>(count_action_items(m.raw_text));
    f.set("memo_action_items", items / static_cast<double>(memos.size()));
  }

  if (b.attempts.size() >= 2) {
    std::size_t stuck = 0;
    for (std::size_t i = 1; i < b.attempts.size(); ++i) {
      if (sorted_summary(b.attempts[i - 1].test_summary) ==
          sorted_summary(b.attempts[i].test_summary)) {
        ++stuck;
      }
    }
    f.set("test_stuck_ratio",
          static_cast<double>(stuck) / static_cast<double>(b.attempts.size() - 1));
  }
  return f;
}

FeatureVector extract_features(const TrajectoryBundle& bundle, const FeatureConfig& config) {
  FeatureVector f = exploration_dynamics(bundle, config);
  f.merge(memo_quality(bundle, config));
  f.merge(skill_structure(bundle, config));
  f.merge(non_predictive_controls(bundle, config));
  return f;
}

}  // namespace pdi
