#include "pdi/cohort.hpp"

#include <algorithm>
#include <set>

#include "pdi/errors.hpp"

namespace pdi {
namespace {

int sign(double x) { return (x > 0.0) - (x < 0.0); }

double mean_of(const std::vector<double>& v) { return mean(v); }

}  // namespace

void Cohort::add_record(const EvaluationRecord& e) {
  if (!index_.emplace(std::tuple(e.model_id, e.task_id, e.condition), e.reward).second) {
    throw Error(ErrorCode::InvariantViolation,
                "duplicate evaluation for " + e.model_id + "/" + e.task_id);
  }
  evaluations_.push_back(e);
}

Cohort Cohort::from_bundles(std::span<const TrajectoryBundle> bundles) {
  Cohort c;
  for (const auto& b : bundles) {
    if (!c.bundles_.emplace(b.task_id, b).second) {
      throw Error(ErrorCode::InvariantViolation, "duplicate task id '" + b.task_id + "'");
    }
    for (const auto& e : b.evaluations) c.add_record(e);
  }
  return c;
}

Cohort Cohort::from_records(std::span<const EvaluationRecord> records) {
  Cohort c;
  for (const auto& e : records) c.add_record(e);
  return c;
}

std::optional<double> Cohort::reward(const std::string& model, const std::string& task,
                                     Condition condition) const {
  const auto it = index_.find(std::tuple(model, task, condition));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> Cohort::models() const {
  std::set<std::string> s;
  for (const auto& e : evaluations_) s.insert(e.model_id);
  return {s.begin(), s.end()};
}

std::vector<std::string> Cohort::tasks() const {
  std::set<std::string> s;
  for (const auto& e : evaluations_) s.insert(e.task_id);
  return {s.begin(), s.end()};
}

double skill_gain(const Cohort& cohort, const std::string& model, const std::string& task,
                  Condition condition) {
  const auto base = cohort.reward(model, task, Condition::Baseline);
  const auto with = cohort.reward(model, task, condition);
  if (!base || !with) {
    throw Error(ErrorCode::MissingRecord, "no " + std::string(condition_name(condition)) +
                                              "/baseline pair for " + model + "/" + task);
  }
  return *with - *base;
}

MeanResult mean_reward(const Cohort& cohort, const std::string& model, Condition condition) {
  std::vector<double> v;
  for (const auto& e : cohort.evaluations()) {
    if (e.model_id == model && e.condition == condition) v.push_back(e.reward);
  }
  if (v.empty()) throw Error(ErrorCode::EmptyCohort, "no rewards for " + model);
  return {mean_of(v), v.size()};
}

MeanResult mean_gain(const Cohort& cohort, const std::string& model, Condition condition) {
  std::vector<double> v;
  for (const auto& task : cohort.tasks()) {
    const auto base = cohort.reward(model, task, Condition::Baseline);
    const auto with = cohort.reward(model, task, condition);
    if (base && with) v.push_back(*with - *base);
  }
  if (v.empty()) throw Error(ErrorCode::EmptyCohort, "no gains for " + model);
  return {mean_of(v), v.size()};
}

double agreement_rate(const Cohort& cohort, const std::string& model_i,
                      const std::string& model_j, Condition condition) {
  std::size_t eligible = 0;
  std::size_t agree = 0;
  for (const auto& task : cohort.tasks()) {
    const auto bi = cohort.reward(model_i, task, Condition::Baseline);
    const auto bj = cohort.reward(model_j, task, Condition::Baseline);
    const auto si = cohort.reward(model_i, task, condition);
    const auto sj = cohort.reward(model_j, task, condition);
    if (!bi || !bj || !si || !sj) continue;
    if (*bi != 0.0 || *bj != 0.0) continue;
    const double gi = *si - *bi;
    const double gj = *sj - *bj;
    if (gi == 0.0 && gj == 0.0) continue;
    ++eligible;
    if (sign(gi) == sign(gj)) ++agree;
  }
  if (eligible == 0) {
    throw Error(ErrorCode::EmptyEligibleSet,
                "no eligible tasks for " + model_i + " vs " + model_j);
  }
  return static_cast<double>(agree) / static_cast<double>(eligible);
}

std::string_view task_group_name(TaskGroup g) {
  switch (g) {
    case TaskGroup::InteractionFree: return "interaction_free";
    case TaskGroup::IterLowPdi: return "iter_low_pdi";
    case TaskGroup::IterHighPdi: return "iter_high_pdi";
  }
  return "interaction_free";
}

std::map<std::string, TaskGroup> group_labels(const Cohort& cohort,
                                              std::span<const PdiScore> scores) {
  std::map<std::string, TaskGroup> out;
  for (const auto& [id, b] : cohort.bundles()) {
    if (b.mode_label() == ModeLabel::InteractionFree) out[id] = TaskGroup::InteractionFree;
  }
  if (scores.empty()) return out;
  std::vector<double> values;
  for (const auto& s : scores) values.push_back(s.pdi);
  const double med = median(values);
  for (const auto& s : scores) {
    out[s.components.task_id] = s.pdi > med ? TaskGroup::IterHighPdi : TaskGroup::IterLowPdi;
  }
  return out;
}

double pass_gain_rate(const Cohort& cohort, std::span<const std::string> tasks,
                      const std::string& model, Condition condition) {
  std::size_t denom = 0;
  std::size_t hits = 0;
  for (const auto& task : tasks) {
    const auto base = cohort.reward(model, task, Condition::Baseline);
    const auto with = cohort.reward(model, task, condition);
    if (!base || !with || *base != 0.0) continue;
    ++denom;
    if (*with >= 1.0) ++hits;
  }
  if (denom == 0) throw Error(ErrorCode::EmptyGroup, "no baseline-unsolved tasks for " + model);
  return static_cast<double>(hits) / static_cast<double>(denom);
}

double gap_to_human(const Cohort& cohort, const std::string& model, const std::string& task) {
  return skill_gain(cohort, model, task, Condition::GeneratedSkill) -
         skill_gain(cohort, model, task, Condition::HumanSkill);
}

std::string_view level_name(Level l) { return l == Level::High ? "High" : "Low"; }

QuadrantTable quadrant_table(std::span<const PdiComponents> components,
                             std::span<const double> gains, std::span<const double> gaps) {
  if (components.size() != gains.size() || components.size() != gaps.size()) {
    throw Error(ErrorCode::InvalidArgument, "quadrant inputs are not aligned");
  }
  if (components.empty()) throw Error(ErrorCode::EmptyCohort, "quadrant table of no tasks");
  std::vector<double> plan, exec;
  for (const auto& c : components) {
    plan.push_back(c.phi_plan);
    exec.push_back(c.phi_exec);
  }
  QuadrantTable t;
  t.plan_median = median(plan);
  t.exec_median = median(exec);
  const auto ties = [](const std::vector<double>& v, double m) {
    return static_cast<std::size_t>(std::count(v.begin(), v.end(), m));
  };
  t.degenerate_median = 2 * ties(plan, t.plan_median) > plan.size() ||
                        2 * ties(exec, t.exec_median) > exec.size();

  const std::pair<Level, Level> order[] = {{Level::Low, Level::High},
                                           {Level::Low, Level::Low},
                                           {Level::High, Level::High},
                                           {Level::High, Level::Low}};
  for (const auto& [pl, el] : order) {
    QuadrantRow row{pl, el, 0, std::nullopt, std::nullopt};
    std::vector<double> g, h;
    for (std::size_t i = 0; i < components.size(); ++i) {
      const Level p = plan[i] > t.plan_median ? Level::High : Level::Low;
      const Level e = exec[i] > t.exec_median ? Level::High : Level::Low;
      if (p == pl && e == el) {
        g.push_back(gains[i]);
        h.push_back(gaps[i]);
      }
    }
    row.n = g.size();
    if (!g.empty()) {
      row.mean_gain = mean(g);
      row.mean_gap = mean(h);
    }
    t.rows.push_back(row);
  }
  return t;
}

std::string_view convergence_label_name(ConvergenceLabel l) {
  return l == ConvergenceLabel::Convergent ? "convergent" : "divergent";
}

Classification classify_j_series(std::span<const double> j_series) {
  if (j_series.size() < 2) {
    throw Error(ErrorCode::InsufficientMemos, "classification needs >= 2 J values");
  }
  std::vector<double> x(j_series.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i + 2);
  Classification c;
  c.j_series.assign(j_series.begin(), j_series.end());
  c.fit = fit_trend(x, j_series);
  c.label = c.fit.slope > 0.0 ? ConvergenceLabel::Convergent : ConvergenceLabel::Divergent;
  return c;
}

Classification classify_trajectory(std::span<const Memo> memos, const TokenizerConfig& config) {
  if (memos.size() < 3) {
    throw Error(ErrorCode::InsufficientMemos, "classification needs >= 3 memos");
  }
  std::vector<double> j;
  for (std::size_t i = 1; i < memos.size(); ++i) {
    j.push_back(jaccard(memos[i - 1].raw_text, memos[i].raw_text, config));
  }
  return classify_j_series(j);
}

double facts_strategy_gap(std::span<const Memo> memos, double alpha, VocabularyPtr vocab,
                          const TokenizerConfig& config) {
  if (memos.size() < 2) {
    throw Error(ErrorCode::InsufficientMemos, "facts-strategy gap needs >= 2 memos");
  }
  if (!vocab) {
    std::vector<std::string> segments;
    for (const auto& m : memos) {
      segments.push_back(facts_text(m));
      segments.push_back(m.next_strategy);
    }
    vocab = build_vocab(segments, config);
  }
  CompensatedSum facts, strategy;
  for (std::size_t i = 1; i < memos.size(); ++i) {
    facts.add(similarity(distribution(facts_text(memos[i - 1]), vocab, alpha, config),
                         distribution(facts_text(memos[i]), vocab, alpha, config)));
    strategy.add(similarity(distribution(memos[i - 1].next_strategy, vocab, alpha, config),
                            distribution(memos[i].next_strategy, vocab, alpha, config)));
  }
  const long double pairs = static_cast<long double>(memos.size() - 1);
  return static_cast<double>(facts.value() / pairs - strategy.value() / pairs);
}

std::vector<AttemptBin> attempt_bins(const Cohort& cohort, Condition condition) {
  std::map<std::pair<std::string, std::size_t>, std::vector<double>> bins;
  for (const auto& model : cohort.models()) {
    for (const auto& [task, bundle] : cohort.bundles()) {
      const auto base = cohort.reward(model, task, Condition::Baseline);
      const auto with = cohort.reward(model, task, condition);
      if (!base || !with || *base != 0.0) continue;
      bins[{model, bundle.attempts.size()}].push_back(*with - *base);
    }
  }
  std::vector<AttemptBin> out;
  for (const auto& [key, gains] : bins) {
    out.push_back({key.first, key.second, gains.size(), mean(gains)});
  }
  return out;
}

}  // namespace pdi
