// pdi: trajectory analytics over bundle corpora.

#include <fstream>
#include <iostream>
#include <stdexcept>

#include <CLI11.hpp>

#include "pdi/bundle_io.hpp"
#include "pdi/commands.hpp"
#include "pdi/errors.hpp"

namespace {

constexpr int kInputError = 1;
constexpr int kInternalError = 2;

void write_output(const pdi::CommandResult& r, const std::string& out_path) {
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  if (out_path.empty()) {
    std::cout << r.output;
  } else {
    pdi::write_file(out_path, r.output);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Posterior distillation index analytics"};
  app.require_subcommand(1);

  pdi::RunConfig config;
  std::string out_path;
  app.add_option("--alpha", config.alpha, "Smoothing constant")
      ->check(CLI::PositiveNumber);
  app.add_option("--tau", config.tau, "Controller threshold");
  app.add_option("--warmup", config.warmup_W, "Controller warm-up length")
      ->check(CLI::PositiveNumber);
  app.add_option("--format", config.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--seed", config.seed, "Seed for folds and simulations");
  app.add_option("--threads", config.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--skip-invalid", config.skip_invalid, "Warn on invalid bundles instead of failing");
  app.add_option("-o,--output", out_path, "Write output to a file");

  std::string corpus, features, outcomes, outcome_column, scenario, bundle_out;
  std::string condition = "generated_skill";
  std::vector<double> alphas;
  std::size_t folds = 0;
  bool no_pdi = false;

  auto* analyze = app.add_subcommand("analyze", "Per-task PDI with cohort summary");
  analyze->add_option("corpus", corpus)->required()->check(CLI::ExistingDirectory);

  auto* feat = app.add_subcommand("features", "Trajectory feature CSV");
  feat->add_option("corpus", corpus)->required()->check(CLI::ExistingDirectory);

  auto* outc = app.add_subcommand("outcomes", "Per-task skill gain for each model");
  outc->add_option("corpus", corpus)->required()->check(CLI::ExistingDirectory);
  outc->add_option("--condition", condition)
      ->check(CLI::IsMember({"generated_skill", "human_skill"}));

  auto* corr = app.add_subcommand("correlate", "Spearman of feature columns against outcomes");
  corr->add_option("features", features)->required()->check(CLI::ExistingFile);
  corr->add_option("outcomes", outcomes)->required()->check(CLI::ExistingFile);

  auto* classify = app.add_subcommand("classify", "Convergent/divergent labels");
  classify->add_option("corpus", corpus)->required()->check(CLI::ExistingDirectory);

  auto* sweep_a = app.add_subcommand("sweep-alpha", "PDI-outcome correlation across alpha");
  sweep_a->add_option("corpus", corpus)->required()->check(CLI::ExistingDirectory);
  sweep_a->add_option("outcomes", outcomes)->required()->check(CLI::ExistingFile);
  sweep_a->add_option("--outcome", outcome_column, "Outcome column (first numeric by default)");
  sweep_a->add_option("--alphas", alphas, "Alpha grid")->delimiter(',');

  auto* sweep_w = app.add_subcommand("sweep-weights", "Component weight grid or k-fold CV");
  sweep_w->add_option("corpus", corpus)->required()->check(CLI::ExistingDirectory);
  sweep_w->add_option("outcomes", outcomes)->required()->check(CLI::ExistingFile);
  sweep_w->add_option("--outcome", outcome_column, "Outcome column (first numeric by default)");
  sweep_w->add_option("--folds", folds, "Run k-fold cross-validation");

  auto* sim = app.add_subcommand("simulate", "Run a scripted scenario; prints the event log");
  sim->add_option("scenario", scenario)->required()->check(CLI::ExistingFile);
  sim->add_option("--bundle-out", bundle_out, "Where to save the resulting bundle");
  sim->add_flag("--no-pdi", no_pdi, "Disable the intervention controller");

  auto* calib = app.add_subcommand("calibrate", "Reference stats for the online controller");
  calib->add_option("corpus", corpus)->required()->check(CLI::ExistingDirectory);

  auto* cohort = app.add_subcommand("cohort", "Cohort tables");
  cohort->add_option("corpus", corpus)->required()->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kInputError;
  }

  try {
    pdi::CommandResult r;
    if (*analyze) {
      r = pdi::cmd_analyze(corpus, config);
    } else if (*feat) {
      r = pdi::cmd_features(corpus, config);
    } else if (*outc) {
      r = pdi::cmd_outcomes(corpus, *pdi::parse_condition(condition), config);
    } else if (*corr) {
      r = pdi::cmd_correlate(pdi::read_file(features), pdi::read_file(outcomes), config);
    } else if (*classify) {
      r = pdi::cmd_classify(corpus, config);
    } else if (*sweep_a) {
      r = pdi::cmd_sweep_alpha(corpus, pdi::read_file(outcomes), outcome_column, alphas, config);
    } else if (*sweep_w) {
      r = pdi::cmd_sweep_weights(corpus, pdi::read_file(outcomes), outcome_column,
                                 folds > 0 ? std::optional(folds) : std::nullopt, config);
    } else if (*sim) {
      r = pdi::cmd_simulate(scenario, bundle_out, !no_pdi, config);
    } else if (*calib) {
      r = pdi::cmd_calibrate(corpus, config);
    } else if (*cohort) {
      r = pdi::cmd_cohort(corpus, config);
    }
    write_output(r, out_path);
  } catch (const pdi::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_internal() ? kInternalError : kInputError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternalError;
  }
  return 0;
}
