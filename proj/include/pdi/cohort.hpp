#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "pdi/pdi_engine.hpp"
#include "pdi/stats.hpp"
#include "pdi/textstats.hpp"
#include "pdi/trajectory.hpp"

namespace pdi {

class Cohort {
 public:
  // Collects every bundle's evaluation records. Throws InvariantViolation on
  // duplicate task ids or duplicate (model, task, condition) records.
  static Cohort from_bundles(std::span<const TrajectoryBundle> bundles);
  static Cohort from_records(std::span<const EvaluationRecord> records);

  const std::vector<EvaluationRecord>& evaluations() const { return evaluations_; }
  const std::map<std::string, TrajectoryBundle>& bundles() const { return bundles_; }

  std::optional<double> reward(const std::string& model, const std::string& task,
                               Condition condition) const;
  std::vector<std::string> models() const;  // sorted, distinct
  std::vector<std::string> tasks() const;   // sorted, distinct, from evaluations

 private:
  void add_record(const EvaluationRecord& e);

  std::vector<EvaluationRecord> evaluations_;
  std::map<std::string, TrajectoryBundle> bundles_;
  std::map<std::tuple<std::string, std::string, Condition>, double> index_;
};

// r(condition) - r(baseline). Throws MissingRecord.
double skill_gain(const Cohort& cohort, const std::string& model, const std::string& task,
                  Condition condition);

struct MeanResult {
  double value = 0.0;
  std::size_t n_tasks = 0;
};

// Throw EmptyCohort when no task qualifies.
MeanResult mean_reward(const Cohort& cohort, const std::string& model, Condition condition);
MeanResult mean_gain(const Cohort& cohort, const std::string& model, Condition condition);

// Share of eligible tasks where sign(gain_i) == sign(gain_j). Eligible: both
// models fail the baseline (reward 0) and at least one gain is nonzero.
// Throws EmptyEligibleSet.
double agreement_rate(const Cohort& cohort, const std::string& model_i,
                      const std::string& model_j,
                      Condition condition = Condition::GeneratedSkill);

enum class TaskGroup { InteractionFree, IterLowPdi, IterHighPdi };
std::string_view task_group_name(TaskGroup g);

// Interaction-free from the bundle's mode; iterative tasks split at the
// median PDI with ties going to Low.
std::map<std::string, TaskGroup> group_labels(const Cohort& cohort,
                                              std::span<const PdiScore> scores);

// Among the tasks where the model scored 0 at baseline, the share reaching
// reward 1 with the skill. Throws EmptyGroup.
double pass_gain_rate(const Cohort& cohort, std::span<const std::string> tasks,
                      const std::string& model,
                      Condition condition = Condition::GeneratedSkill);

// gain(generated) - gain(human).
double gap_to_human(const Cohort& cohort, const std::string& model, const std::string& task);

enum class Level { Low, High };
std::string_view level_name(Level l);

struct QuadrantRow {
  Level plan_level = Level::Low;
  Level exec_level = Level::Low;
  std::size_t n = 0;
  std::optional<double> mean_gain;  // absent for empty quadrants
  std::optional<double> mean_gap;
};

struct QuadrantTable {
  // Order: (plan Low, exec High), (Low, Low), (High, High), (High, Low).
  std::vector<QuadrantRow> rows;
  double plan_median = 0.0;
  double exec_median = 0.0;
  bool degenerate_median = false;  // more than half the values equal a median
};

QuadrantTable quadrant_table(std::span<const PdiComponents> components,
                             std::span<const double> gains, std::span<const double> gaps);

enum class ConvergenceLabel { Convergent, Divergent };
std::string_view convergence_label_name(ConvergenceLabel l);

struct Classification {
  TrendFit fit;
  ConvergenceLabel label = ConvergenceLabel::Divergent;
  std::vector<double> j_series;  // J_i for i = 2..K
};

// OLS over (i, J_i) for i = 2..K; Convergent iff slope > 0.
Classification classify_j_series(std::span<const double> j_series);
// J_i = jaccard of consecutive memo texts. Throws InsufficientMemos below 3.
Classification classify_trajectory(std::span<const Memo> memos,
                                   const TokenizerConfig& config = {});

// Mean psi over consecutive Verified Facts pairs minus mean psi over
// consecutive Next Strategy pairs. Without a vocabulary, the union of the
// memos' facts and strategies is used. Throws InsufficientMemos below 2.
double facts_strategy_gap(std::span<const Memo> memos, double alpha = kDefaultAlpha,
                          VocabularyPtr vocab = nullptr, const TokenizerConfig& config = {});

struct AttemptBin {
  std::string model;
  std::size_t attempts = 0;  // K
  std::size_t n_tasks = 0;
  double mean_gain = 0.0;
};

// Mean gain per (model, K) over tasks the model failed at baseline. Bins
// without such tasks are omitted.
std::vector<AttemptBin> attempt_bins(const Cohort& cohort,
                                     Condition condition = Condition::GeneratedSkill);

}  // namespace pdi
