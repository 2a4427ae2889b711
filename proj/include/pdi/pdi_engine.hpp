#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pdi/stats.hpp"
#include "pdi/textstats.hpp"
#include "pdi/trajectory.hpp"

namespace pdi {

inline constexpr double kDefaultAlpha = 0.002;

struct PdiComponents {
  std::string task_id;
  double phi_plan = 0.0;
  double phi_exec = 0.0;
  std::optional<double> phi_oss;  // absent with fewer than two memos
  double alpha = kDefaultAlpha;
};

struct PdiScore {
  PdiComponents components;
  double z_exec = 0.0;
  double z_plan = 0.0;
  double z_oss = 0.0;
  double pdi = 0.0;
  std::string cohort_id;
  std::vector<std::string> flags;
};

// Shared vocabulary of every segment compared within one trajectory: skill
// body, Next Strategy and Verified Facts of each memo, commands of the
// solved attempt, and failed test identifiers (verbatim, one token each).
VocabularyPtr trajectory_vocab(const TrajectoryBundle& bundle,
                               const TokenizerConfig& config = {});

// Names of failed tests, used verbatim as tokens.
std::vector<std::string> failed_test_tokens(const TestSummary& summary);

// Verified Facts items of a memo, newline-joined.
std::string facts_text(const Memo& memo);

double phi_plan(const TrajectoryBundle& bundle, double alpha = kDefaultAlpha,
                const TokenizerConfig& config = {});
double phi_exec(const TrajectoryBundle& bundle, double alpha = kDefaultAlpha,
                const TokenizerConfig& config = {});
// Throws InsufficientHistory with fewer than two memos or fewer than two
// reflected attempts carrying a test summary.
double phi_oss(const TrajectoryBundle& bundle, double alpha = kDefaultAlpha,
               const TokenizerConfig& config = {});

// All three components; phi_oss is recorded absent on InsufficientHistory.
PdiComponents compute_components(const TrajectoryBundle& bundle,
                                 double alpha = kDefaultAlpha,
                                 const TokenizerConfig& config = {});

// PDI = z(exec) - z(plan) - z(oss) over the cohort. Degenerate columns and
// absent phi_oss contribute z = 0 and are flagged on the affected scores.
std::vector<PdiScore> pdi(std::span<const PdiComponents> cohort,
                          const std::string& cohort_id = "cohort");

// 16 smoothing values from 1e-10 to 10, denser around the default.
std::vector<double> default_alpha_grid();

struct AlphaSweepRow {
  double alpha = 0.0;
  std::optional<SpearmanResult> correlation;  // absent: DegenerateCorrelation
};

std::vector<AlphaSweepRow> alpha_sweep(std::span<const TrajectoryBundle> cohort,
                                       std::span<const double> alphas,
                                       std::span<const double> outcomes,
                                       const TokenizerConfig& config = {});

struct WeightVector {
  double w_e = 1.0;
  double w_p = 1.0;
  double w_o = 1.0;
  bool operator==(const WeightVector&) const = default;
};

struct ZTriple {
  double z_exec = 0.0;
  double z_plan = 0.0;
  double z_oss = 0.0;
};

ZTriple z_triple(const PdiScore& score);
double composite(const ZTriple& z, const WeightVector& w);

// {0, 0.5, 1, 1.5}^3 restricted to w_e > 0.
std::vector<WeightVector> default_weight_grid();

struct WeightSweepRow {
  WeightVector weights;
  std::optional<SpearmanResult> correlation;
};

// Throws RejectedWeights if any grid entry has w_e <= 0.
std::vector<WeightSweepRow> weight_sweep(std::span<const ZTriple> scores,
                                         std::span<const double> outcomes,
                                         std::span<const WeightVector> grid);

// Deterministic partition of 0..n-1 into k folds for a given seed.
std::vector<std::vector<std::size_t>> assign_folds(std::size_t n, std::size_t k,
                                                   std::uint64_t seed);

struct CvFold {
  std::size_t fold = 0;
  std::vector<std::size_t> held_out;
  WeightVector fitted;
  std::optional<double> rho_fitted_train;
  std::optional<double> rho_fitted_heldout;
  std::optional<double> rho_equal_heldout;
};

// k-fold task cross-validation of the weight grid search. Throws
// FoldTooSmall when k < 2 or a fold would be empty.
std::vector<CvFold> weight_cv(std::span<const ZTriple> scores,
                              std::span<const double> outcomes, std::size_t k,
                              std::span<const WeightVector> grid, std::uint64_t seed);

}  // namespace pdi
