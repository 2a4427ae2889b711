#include "pdi/pdi_engine.hpp"

#include <algorithm>
#include <random>

#include "pdi/errors.hpp"
#include "pdi/parsers.hpp"

namespace pdi {
namespace {

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

const SkillDocument& require_skill(const TrajectoryBundle& b) {
  if (!b.skill) {
    throw Error(ErrorCode::MissingSkill, "bundle '" + b.task_id + "' has no skill");
  }
  return *b.skill;
}

const Attempt& require_solved(const TrajectoryBundle& b) {
  const Attempt* a = b.solved_attempt();
  if (!a) throw Error(ErrorCode::Unsolved, "bundle '" + b.task_id + "' is unsolved");
  return *a;
}

std::string strategy_text(const TrajectoryBundle& b) {
  std::vector<std::string> parts;
  for (const auto& m : b.memos) parts.push_back(m.next_strategy);
  return join(parts, "\n");
}

// Test summaries of reflected attempts (those followed by a memo).
std::vector<const TestSummary*> reflected_summaries(const TrajectoryBundle& b) {
  std::vector<const TestSummary*> out;
  const std::size_t m = std::min(b.memos.size(), b.attempts.size());
  for (std::size_t i = 0; i < m; ++i) {
    if (!b.attempts[i].test_summary.empty()) out.push_back(&b.attempts[i].test_summary);
  }
  return out;
}

std::optional<SpearmanResult> try_spearman(std::span<const double> x,
                                           std::span<const double> y) {
  try {
    return spearman(x, y);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::DegenerateInput) return std::nullopt;
    throw;
  }
}

std::vector<double> composites(std::span<const ZTriple> scores, const WeightVector& w,
                               std::span<const std::size_t> idx) {
  std::vector<double> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(composite(scores[i], w));
  return out;
}

std::vector<double> pick(std::span<const double> v, std::span<const std::size_t> idx) {
  std::vector<double> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(v[i]);
  return out;
}

}  // namespace

std::vector<std::string> failed_test_tokens(const TestSummary& summary) {
  std::vector<std::string> out;
  for (const auto& t : summary) {
    if (!t.passed) out.push_back(t.name);
  }
  return out;
}

std::string facts_text(const Memo& memo) { return join(memo.verified_facts, "\n"); }

VocabularyPtr trajectory_vocab(const TrajectoryBundle& bundle,
                               const TokenizerConfig& config) {
  std::vector<std::vector<std::string>> segments;
  if (bundle.skill) segments.push_back(tokenize(bundle.skill->body_text, config));
  for (const auto& m : bundle.memos) {
    segments.push_back(tokenize(m.next_strategy, config));
    segments.push_back(tokenize(facts_text(m), config));
  }
  if (const Attempt* solved = bundle.solved_attempt()) {
    segments.push_back(tokenize(join(solved->commands, "\n"), config));
  }
  for (const auto* summary : reflected_summaries(bundle)) {
    segments.push_back(failed_test_tokens(*summary));
  }
  return build_vocab_from_tokens(segments);
}

double phi_plan(const TrajectoryBundle& bundle, double alpha, const TokenizerConfig& config) {
  const auto& skill = require_skill(bundle);
  const std::string strategies = strategy_text(bundle);
  if (tokenize(strategies, config).empty()) {
    throw Error(ErrorCode::NoStrategyText,
                "bundle '" + bundle.task_id + "' has no Next Strategy text");
  }
  const auto vocab = trajectory_vocab(bundle, config);
  return similarity(distribution(strategies, vocab, alpha, config),
                    distribution(skill.body_text, vocab, alpha, config));
}

double phi_exec(const TrajectoryBundle& bundle, double alpha, const TokenizerConfig& config) {
  const auto& solved = require_solved(bundle);
  const auto& skill = require_skill(bundle);
  const auto vocab = trajectory_vocab(bundle, config);
  return similarity(distribution(join(solved.commands, "\n"), vocab, alpha, config),
                    distribution(skill.body_text, vocab, alpha, config));
}

double phi_oss(const TrajectoryBundle& bundle, double alpha, const TokenizerConfig& config) {
  const auto summaries = reflected_summaries(bundle);
  if (bundle.memos.size() < 2 || summaries.size() < 2) {
    throw Error(ErrorCode::InsufficientHistory,
                "bundle '" + bundle.task_id + "' needs two memos and two test summaries");
  }
  const auto vocab = trajectory_vocab(bundle, config);
  CompensatedSum facts;
  for (std::size_t i = 1; i < bundle.memos.size(); ++i) {
    facts.add(similarity(distribution(facts_text(bundle.memos[i - 1]), vocab, alpha, config),
                         distribution(facts_text(bundle.memos[i]), vocab, alpha, config)));
  }
  CompensatedSum failed;
  for (std::size_t i = 1; i < summaries.size(); ++i) {
    const auto prev = failed_test_tokens(*summaries[i - 1]);
    const auto curr = failed_test_tokens(*summaries[i]);
    failed.add(similarity(distribution_from_tokens(prev, vocab, alpha),
                          distribution_from_tokens(curr, vocab, alpha)));
  }
  const long double facts_mean =
      facts.value() / static_cast<long double>(bundle.memos.size() - 1);
  const long double failed_mean =
      failed.value() / static_cast<long double>(summaries.size() - 1);
  return static_cast<double>(0.5L * facts_mean + 0.5L * failed_mean);
}

PdiComponents compute_components(const TrajectoryBundle& bundle, double alpha,
                                 const TokenizerConfig& config) {
  PdiComponents c;
  c.task_id = bundle.task_id;
  c.alpha = alpha;
  c.phi_plan = phi_plan(bundle, alpha, config);
  c.phi_exec = phi_exec(bundle, alpha, config);
  try {
    c.phi_oss = phi_oss(bundle, alpha, config);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::InsufficientHistory) throw;
  }
  return c;
}

std::vector<PdiScore> pdi(std::span<const PdiComponents> cohort, const std::string& cohort_id) {
  const std::size_t n = cohort.size();
  std::vector<PdiScore> out(n);
  std::vector<double> exec(n), plan(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].components = cohort[i];
    out[i].cohort_id = cohort_id;
    exec[i] = cohort[i].phi_exec;
    plan[i] = cohort[i].phi_plan;
  }

  const auto zcol = [&](std::span<const double> values, const std::vector<std::size_t>& rows,
                        double PdiScore::*field, const char* flag) {
    try {
      const auto z = zscore_cohort(values);
      for (std::size_t k = 0; k < rows.size(); ++k) out[rows[k]].*field = z[k];
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateCohort) throw;
      for (auto r : rows) {
        out[r].*field = 0.0;
        out[r].flags.emplace_back(flag);
      }
    }
  };

  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  zcol(exec, all, &PdiScore::z_exec, "degenerate_exec");
  zcol(plan, all, &PdiScore::z_plan, "degenerate_plan");

  std::vector<std::size_t> with_oss;
  std::vector<double> oss;
  for (std::size_t i = 0; i < n; ++i) {
    if (cohort[i].phi_oss) {
      with_oss.push_back(i);
      oss.push_back(*cohort[i].phi_oss);
    } else {
      out[i].z_oss = 0.0;
      out[i].flags.emplace_back("oss_absent");
    }
  }
  if (!with_oss.empty()) zcol(oss, with_oss, &PdiScore::z_oss, "degenerate_oss");

  for (auto& s : out) s.pdi = s.z_exec - s.z_plan - s.z_oss;
  return out;
}

std::vector<double> default_alpha_grid() {
  return {1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 5e-4, 1e-3, 2e-3,
          5e-3,  7e-3, 1e-2, 1e-1, 1.0,  10.0};
}

std::vector<AlphaSweepRow> alpha_sweep(std::span<const TrajectoryBundle> cohort,
                                       std::span<const double> alphas,
                                       std::span<const double> outcomes,
                                       const TokenizerConfig& config) {
  if (outcomes.size() != cohort.size()) {
    throw Error(ErrorCode::InvalidArgument, "outcomes are not aligned with the cohort");
  }
  std::vector<AlphaSweepRow> rows;
  for (double alpha : alphas) {
    if (!(alpha > 0.0)) throw Error(ErrorCode::NonPositiveAlpha, "sweep alpha must be > 0");
    std::vector<PdiComponents> comps;
    comps.reserve(cohort.size());
    for (const auto& b : cohort) comps.push_back(compute_components(b, alpha, config));
    const auto scores = pdi(comps);
    std::vector<double> values;
    for (const auto& s : scores) values.push_back(s.pdi);
    rows.push_back({alpha, try_spearman(values, outcomes)});
  }
  return rows;
}

ZTriple z_triple(const PdiScore& score) { return {score.z_exec, score.z_plan, score.z_oss}; }

double composite(const ZTriple& z, const WeightVector& w) {
  return w.w_e * z.z_exec - w.w_p * z.z_plan - w.w_o * z.z_oss;
}

std::vector<WeightVector> default_weight_grid() {
  const double levels[] = {0.0, 0.5, 1.0, 1.5};
  std::vector<WeightVector> grid;
  for (double we : levels) {
    if (we <= 0.0) continue;
    for (double wp : levels) {
      for (double wo : levels) grid.push_back({we, wp, wo});
    }
  }
  return grid;
}

std::vector<WeightSweepRow> weight_sweep(std::span<const ZTriple> scores,
                                         std::span<const double> outcomes,
                                         std::span<const WeightVector> grid) {
  if (scores.size() != outcomes.size()) {
    throw Error(ErrorCode::InvalidArgument, "outcomes are not aligned with the scores");
  }
  for (const auto& w : grid) {
    if (!(w.w_e > 0.0)) {
      throw Error(ErrorCode::RejectedWeights, "weight vectors need w_e > 0");
    }
  }
  std::vector<std::size_t> all(scores.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  std::vector<WeightSweepRow> rows;
  for (const auto& w : grid) {
    rows.push_back({w, try_spearman(composites(scores, w, all), outcomes)});
  }
  return rows;
}

std::vector<std::vector<std::size_t>> assign_folds(std::size_t n, std::size_t k,
                                                   std::uint64_t seed) {
  if (k < 2 || k > n) {
    throw Error(ErrorCode::FoldTooSmall,
                "cannot split " + std::to_string(n) + " tasks into " + std::to_string(k) +
                    " nonempty folds");
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  // Explicit Fisher-Yates: std::shuffle's draw sequence is not portable.
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t p = 0; p < n; ++p) folds[p % k].push_back(order[p]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

std::vector<CvFold> weight_cv(std::span<const ZTriple> scores,
                              std::span<const double> outcomes, std::size_t k,
                              std::span<const WeightVector> grid, std::uint64_t seed) {
  if (scores.size() != outcomes.size()) {
    throw Error(ErrorCode::InvalidArgument, "outcomes are not aligned with the scores");
  }
  if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "empty weight grid");
  for (const auto& w : grid) {
    if (!(w.w_e > 0.0)) throw Error(ErrorCode::RejectedWeights, "weight vectors need w_e > 0");
  }
  const auto folds = assign_folds(scores.size(), k, seed);
  const WeightVector equal{1.0, 1.0, 1.0};
  std::vector<CvFold> out;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    CvFold fold;
    fold.fold = f + 1;
    fold.held_out = folds[f];
    std::vector<std::size_t> train;
    for (std::size_t g = 0; g < folds.size(); ++g) {
      if (g != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
    }
    std::sort(train.begin(), train.end());
    const auto train_y = pick(outcomes, train);
    const auto held_y = pick(outcomes, fold.held_out);

    fold.fitted = grid.front();
    for (const auto& w : grid) {
      const auto r = try_spearman(composites(scores, w, train), train_y);
      if (r && (!fold.rho_fitted_train || r->rho > *fold.rho_fitted_train)) {
        fold.rho_fitted_train = r->rho;
        fold.fitted = w;
      }
    }
    if (auto r = try_spearman(composites(scores, fold.fitted, fold.held_out), held_y)) {
      fold.rho_fitted_heldout = r->rho;
    }
    if (auto r = try_spearman(composites(scores, equal, fold.held_out), held_y)) {
      fold.rho_equal_heldout = r->rho;
    }
    out.push_back(std::move(fold));
  }
  return out;
}

}  // namespace pdi
