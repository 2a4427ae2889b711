#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pdi/controller.hpp"
#include "pdi/pdi_engine.hpp"
#include "pdi/report.hpp"
#include "pdi/trajectory.hpp"

namespace pdi {

inline constexpr std::uint64_t kDefaultSeed = 20240917;

struct RunConfig {
  double alpha = kDefaultAlpha;
  double tau = -0.5;
  int warmup_W = 2;
  std::string format = "csv";  // csv | json
  std::uint64_t seed = kDefaultSeed;
  unsigned threads = 1;
  bool skip_invalid = false;
  TokenizerConfig tokenizer;

  ReportConfig report() const;
  ControllerConfig controller() const;
};

struct CommandResult {
  std::string output;
  std::vector<std::string> warnings;
};

struct Corpus {
  std::vector<TrajectoryBundle> bundles;  // ordered by path
  std::vector<std::string> warnings;
};

// Loads every bundle directory (one holding bundle.json) and every *.json
// archive directly under dir. A failing bundle aborts with its path in the
// message unless skip_invalid, which turns it into a warning.
Corpus load_corpus(const std::filesystem::path& dir, const RunConfig& config);

// Components for each bundle that can enter the PDI cohort (solved,
// iterative, with a skill); the rest are listed with the reason.
struct CohortComponents {
  std::vector<PdiComponents> components;
  std::vector<std::size_t> bundle_index;
  std::vector<std::pair<std::string, std::string>> excluded;  // task_id, reason
};
CohortComponents cohort_components(const std::vector<TrajectoryBundle>& bundles, double alpha,
                                   const RunConfig& config);

CommandResult cmd_analyze(const std::filesystem::path& corpus, const RunConfig& config);
CommandResult cmd_features(const std::filesystem::path& corpus, const RunConfig& config);
// Per-task skill gain for every model under the given condition.
CommandResult cmd_outcomes(const std::filesystem::path& corpus, Condition condition,
                           const RunConfig& config);
// Spearman of every numeric feature column against every numeric outcome
// column, joined on task_id.
CommandResult cmd_correlate(const std::string& features_csv, const std::string& outcomes_csv,
                            const RunConfig& config);
CommandResult cmd_classify(const std::filesystem::path& corpus, const RunConfig& config);
CommandResult cmd_sweep_alpha(const std::filesystem::path& corpus, const std::string& outcomes_csv,
                              const std::string& outcome_column, std::vector<double> alphas,
                              const RunConfig& config);
// With folds set, reports the per-fold cross-validation instead of the grid.
CommandResult cmd_sweep_weights(const std::filesystem::path& corpus,
                                const std::string& outcomes_csv,
                                const std::string& outcome_column,
                                std::optional<std::size_t> folds, const RunConfig& config);
// Runs a scenario file and writes the bundle to out; output is the event log.
CommandResult cmd_simulate(const std::filesystem::path& scenario, const std::filesystem::path& out,
                           bool pdi_enabled, const RunConfig& config);
CommandResult cmd_calibrate(const std::filesystem::path& corpus, const RunConfig& config);
// Cohort tables: means, agreement, pass-gain, quadrants, attempt bins,
// facts-strategy gap and the high/low PDI Mann-Whitney test.
CommandResult cmd_cohort(const std::filesystem::path& corpus, const RunConfig& config);

}  // namespace pdi
