#include "pdi/commands.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "pdi/bundle_io.hpp"
#include "pdi/cohort.hpp"
#include "pdi/errors.hpp"
#include "pdi/features.hpp"
#include "pdi/harness.hpp"
#include "pdi/scripted.hpp"
#include "pdi/stats.hpp"

namespace fs = std::filesystem;

namespace pdi {
namespace {

CommandResult emit(std::vector<Table> tables, const RunConfig& config,
                   std::vector<std::string> warnings = {}) {
  CommandResult r;
  r.output = config.format == "json" ? render_json(tables, config.report())
                                     : render_csv(tables, config.report());
  r.warnings = std::move(warnings);
  return r;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? std::string(sep) : "") + parts[i];
  return out;
}

// Task id -> value of one numeric outcome column.
struct Outcomes {
  std::string column;
  std::map<std::string, double> values;
};

bool is_numeric_column(const CsvTable& t, std::size_t c) {
  bool any = false;
  for (const auto& row : t.rows) {
    if (row[c].empty()) continue;
    if (!parse_number(row[c])) return false;
    any = true;
  }
  return any;
}

std::size_t task_column(const CsvTable& t, const char* what) {
  const auto c = t.column("task_id");
  if (!c) throw Error(ErrorCode::MissingField, std::string(what) + " has no task_id column");
  std::set<std::string> seen;
  for (const auto& row : t.rows) {
    if (!seen.insert(row[*c]).second) {
      throw Error(ErrorCode::InvalidArgument,
                  std::string(what) + " repeats task_id '" + row[*c] + "'");
    }
  }
  return *c;
}

Outcomes read_outcomes(const std::string& csv_text, const std::string& column) {
  const auto t = parse_csv(csv_text);
  const std::size_t tc = task_column(t, "outcomes");
  std::optional<std::size_t> oc;
  if (column.empty()) {
    for (std::size_t c = 0; c < t.header.size(); ++c) {
      if (c != tc && is_numeric_column(t, c)) {
        oc = c;
        break;
      }
    }
    if (!oc) throw Error(ErrorCode::MissingField, "outcomes have no numeric column");
  } else {
    oc = t.column(column);
    if (!oc) throw Error(ErrorCode::MissingField, "outcomes have no column '" + column + "'");
  }
  Outcomes o{t.header[*oc], {}};
  for (const auto& row : t.rows) {
    if (row[*oc].empty()) continue;
    const auto v = parse_number(row[*oc]);
    if (!v) {
      throw Error(ErrorCode::InvalidArgument,
                  "outcome '" + row[*oc] + "' for " + row[tc] + " is not a number");
    }
    o.values[row[tc]] = *v;
  }
  return o;
}

// Cohort members that have an outcome, in cohort order.
struct Joined {
  std::vector<std::size_t> members;  // indices into CohortComponents
  std::vector<double> outcomes;
};

Joined join_outcomes(const CohortComponents& cc, const Outcomes& o) {
  Joined j;
  for (std::size_t i = 0; i < cc.components.size(); ++i) {
    const auto it = o.values.find(cc.components[i].task_id);
    if (it == o.values.end()) continue;
    j.members.push_back(i);
    j.outcomes.push_back(it->second);
  }
  return j;
}

std::vector<std::string> excluded_notes(const CohortComponents& cc) {
  std::vector<std::string> notes;
  for (const auto& [task, reason] : cc.excluded) notes.push_back("excluded: " + task + " (" + reason + ")");
  return notes;
}

// Mean gain across models for one task; nullopt when no model has a pair.
std::optional<double> task_gain(const Cohort& cohort, const std::string& task,
                                const std::vector<std::string>& models) {
  std::vector<double> g;
  for (const auto& m : models) {
    const auto base = cohort.reward(m, task, Condition::Baseline);
    const auto with = cohort.reward(m, task, Condition::GeneratedSkill);
    if (base && with) g.push_back(*with - *base);
  }
  if (g.empty()) return std::nullopt;
  return mean(g);
}

std::optional<double> task_gap(const Cohort& cohort, const std::string& task,
                               const std::vector<std::string>& models) {
  std::vector<double> g;
  for (const auto& m : models) {
    try {
      g.push_back(gap_to_human(cohort, m, task));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::MissingRecord) throw;
    }
  }
  if (g.empty()) return std::nullopt;
  return mean(g);
}

}  // namespace

ReportConfig RunConfig::report() const {
  ReportConfig r;
  r.alpha = alpha;
  r.tokenizer = tokenizer.version;
  return r;
}

ControllerConfig RunConfig::controller() const {
  ControllerConfig c;
  c.tau = tau;
  c.warmup_W = warmup_W;
  c.alpha = alpha;
  c.tokenizer = tokenizer;
  return c;
}

Corpus load_corpus(const fs::path& dir, const RunConfig& config) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::IoFailure, "corpus '" + dir.string() + "' is not a directory");
  }
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto& p = entry.path();
    if (entry.is_directory() && fs::exists(p / "bundle.json")) {
      paths.push_back(p);
    } else if (entry.is_regular_file() && p.extension() == ".json") {
      paths.push_back(p);
    }
  }
  std::sort(paths.begin(), paths.end());

  std::vector<std::optional<TrajectoryBundle>> loaded(paths.size());
  std::vector<std::string> failures(paths.size());
  parallel_for(paths.size(), config.threads, [&](std::size_t i) {
    try {
      loaded[i] = load_bundle(paths[i]);
    } catch (const Error& e) {
      if (e.is_internal()) throw;
      failures[i] = paths[i].string() + ": " + e.what();
    } catch (const std::filesystem::filesystem_error& e) {
      failures[i] = paths[i].string() + ": " + e.what();
    }
  });

  Corpus c;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    if (loaded[i]) {
      c.bundles.push_back(std::move(*loaded[i]));
    } else if (config.skip_invalid) {
      c.warnings.push_back("skipped " + failures[i]);
    } else {
      throw Error(ErrorCode::InvalidArgument, "invalid bundle " + failures[i]);
    }
  }
  std::set<std::string> ids;
  for (const auto& b : c.bundles) {
    if (!ids.insert(b.task_id).second) {
      throw Error(ErrorCode::InvariantViolation, "duplicate task id '" + b.task_id + "' in corpus");
    }
  }
  return c;
}

CohortComponents cohort_components(const std::vector<TrajectoryBundle>& bundles, double alpha,
                                   const RunConfig& config) {
  std::vector<std::optional<PdiComponents>> comps(bundles.size());
  std::vector<std::string> reasons(bundles.size());
  parallel_for(bundles.size(), config.threads, [&](std::size_t i) {
    const auto& b = bundles[i];
    const auto mode = b.mode_label();
    if (!mode) {
      reasons[i] = std::string(error_code_name(ErrorCode::Unsolved));
    } else if (*mode == ModeLabel::InteractionFree) {
      reasons[i] = std::string(mode_label_name(*mode));
    } else {
      try {
        comps[i] = compute_components(b, alpha, config.tokenizer);
      } catch (const Error& e) {
        if (e.is_internal()) throw;
        reasons[i] = std::string(error_code_name(e.code()));
      }
    }
  });
  CohortComponents cc;
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    if (comps[i]) {
      cc.components.push_back(*comps[i]);
      cc.bundle_index.push_back(i);
    } else {
      cc.excluded.emplace_back(bundles[i].task_id, reasons[i]);
    }
  }
  return cc;
}

CommandResult cmd_analyze(const fs::path& corpus, const RunConfig& config) {
  auto loaded = load_corpus(corpus, config);
  const auto cc = cohort_components(loaded.bundles, config.alpha, config);
  const auto scores = pdi(cc.components);

  Table t{"pdi",
          {"task_id", "group", "phi_exec", "phi_plan", "phi_oss", "z_exec", "z_plan", "z_oss",
           "pdi", "flags"},
          {},
          {}};
  std::vector<double> values;
  for (const auto& s : scores) values.push_back(s.pdi);
  const double med = values.empty() ? 0.0 : median(values);
  for (const auto& s : scores) {
    const auto& c = s.components;
    const std::string group = std::string(task_group_name(
        s.pdi > med ? TaskGroup::IterHighPdi : TaskGroup::IterLowPdi));
    t.rows.push_back({c.task_id, group, c.phi_exec, c.phi_plan, cell(c.phi_oss), s.z_exec,
                      s.z_plan, s.z_oss, s.pdi, join(s.flags, ";")});
  }
  t.notes.push_back("cohort n=" + std::to_string(scores.size()) +
                    (values.empty() ? "" : " median_pdi=" + format_decimal(med)));
  for (auto& n : excluded_notes(cc)) t.notes.push_back(std::move(n));
  return emit({std::move(t)}, config, std::move(loaded.warnings));
}

CommandResult cmd_features(const fs::path& corpus, const RunConfig& config) {
  auto loaded = load_corpus(corpus, config);
  FeatureConfig fc;
  fc.tokenizer = config.tokenizer;
  std::vector<FeatureVector> fv(loaded.bundles.size());
  parallel_for(fv.size(), config.threads,
               [&](std::size_t i) { fv[i] = extract_features(loaded.bundles[i], fc); });
  Table t{"features", {"task_id"}, {}, {}};
  for (const auto& spec : feature_specs()) t.columns.emplace_back(spec.id);
  for (std::size_t i = 0; i < fv.size(); ++i) {
    std::vector<Cell> row{loaded.bundles[i].task_id};
    for (std::size_t f = 0; f < kFeatureCount; ++f) row.push_back(cell(fv[i].at(f)));
    t.rows.push_back(std::move(row));
  }
  return emit({std::move(t)}, config, std::move(loaded.warnings));
}

CommandResult cmd_outcomes(const fs::path& corpus, Condition condition, const RunConfig& config) {
  auto loaded = load_corpus(corpus, config);
  const auto cohort = Cohort::from_bundles(loaded.bundles);
  const auto models = cohort.models();
  Table t{"outcomes", {"task_id"}, {}, {}};
  for (const auto& m : models) t.columns.push_back("gain_" + m);
  for (const auto& task : cohort.tasks()) {
    std::vector<Cell> row{task};
    for (const auto& m : models) {
      const auto base = cohort.reward(m, task, Condition::Baseline);
      const auto with = cohort.reward(m, task, condition);
      row.push_back(base && with ? Cell(*with - *base) : Cell());
    }
    t.rows.push_back(std::move(row));
  }
  t.notes.push_back("condition=" + std::string(condition_name(condition)));
  return emit({std::move(t)}, config, std::move(loaded.warnings));
}

CommandResult cmd_correlate(const std::string& features_csv, const std::string& outcomes_csv,
                            const RunConfig& config) {
  const auto ft = parse_csv(features_csv);
  const auto ot = parse_csv(outcomes_csv);
  const std::size_t ftc = task_column(ft, "features");
  const std::size_t otc = task_column(ot, "outcomes");
  std::map<std::string, const std::vector<std::string>*> by_task;
  for (const auto& row : ot.rows) by_task[row[otc]] = &row;

  Table t{"correlations", {"feature", "outcome", "n", "rho", "p_value", "method", "stars"}, {}, {}};
  for (std::size_t fc = 0; fc < ft.header.size(); ++fc) {
    if (fc == ftc || !is_numeric_column(ft, fc)) continue;
    for (std::size_t oc = 0; oc < ot.header.size(); ++oc) {
      if (oc == otc || !is_numeric_column(ot, oc)) continue;
      std::vector<double> x, y;
      for (const auto& row : ft.rows) {
        const auto it = by_task.find(row[ftc]);
        if (it == by_task.end()) continue;
        const auto xv = parse_number(row[fc]);
        const auto yv = parse_number((*it->second)[oc]);
        if (!xv || !yv) continue;
        x.push_back(*xv);
        y.push_back(*yv);
      }
      std::vector<Cell> out{ft.header[fc], ot.header[oc], static_cast<double>(x.size())};
      try {
        const auto r = spearman(x, y);
        out.insert(out.end(), {r.rho, r.p_value, std::string(p_value_method_name(r.method)),
                               std::string(significance_stars(r.p_value))});
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateInput) throw;
        out.insert(out.end(), {Cell(), Cell(), std::string("DegenerateCorrelation"), Cell()});
      }
      t.rows.push_back(std::move(out));
    }
  }
  return emit({std::move(t)}, config);
}

CommandResult cmd_classify(const fs::path& corpus, const RunConfig& config) {
  auto loaded = load_corpus(corpus, config);
  Table t{"classification", {"task_id", "n_memos", "intercept", "slope", "label"}, {}, {}};
  for (const auto& b : loaded.bundles) {
    if (b.memos.size() < 3) {
      t.notes.push_back("excluded: " + b.task_id + " (InsufficientMemos)");
      continue;
    }
    const auto c = classify_trajectory(b.memos, config.tokenizer);
    t.rows.push_back({b.task_id, static_cast<double>(b.memos.size()), c.fit.intercept,
                      c.fit.slope, std::string(convergence_label_name(c.label))});
  }
  return emit({std::move(t)}, config, std::move(loaded.warnings));
}

CommandResult cmd_sweep_alpha(const fs::path& corpus, const std::string& outcomes_csv,
                              const std::string& outcome_column, std::vector<double> alphas,
                              const RunConfig& config) {
  auto loaded = load_corpus(corpus, config);
  const auto outcomes = read_outcomes(outcomes_csv, outcome_column);
  const auto cc = cohort_components(loaded.bundles, config.alpha, config);
  const auto joined = join_outcomes(cc, outcomes);
  std::vector<TrajectoryBundle> members;
  for (auto i : joined.members) members.push_back(loaded.bundles[cc.bundle_index[i]]);
  if (alphas.empty()) alphas = default_alpha_grid();

  const auto rows = alpha_sweep(members, alphas, joined.outcomes, config.tokenizer);
  Table t{"alpha_sweep", {"alpha", "n", "rho", "p_value", "method"}, {}, {}};
  for (const auto& r : rows) {
    if (r.correlation) {
      t.rows.push_back({r.alpha, static_cast<double>(members.size()), r.correlation->rho,
                        r.correlation->p_value,
                        std::string(p_value_method_name(r.correlation->method))});
    } else {
      t.rows.push_back({r.alpha, static_cast<double>(members.size()), Cell(), Cell(),
                        std::string("DegenerateCorrelation")});
    }
  }
  t.notes.push_back("outcome=" + outcomes.column);
  return emit({std::move(t)}, config, std::move(loaded.warnings));
}

CommandResult cmd_sweep_weights(const fs::path& corpus, const std::string& outcomes_csv,
                                const std::string& outcome_column,
                                std::optional<std::size_t> folds, const RunConfig& config) {
  auto loaded = load_corpus(corpus, config);
  const auto outcomes = read_outcomes(outcomes_csv, outcome_column);
  const auto cc = cohort_components(loaded.bundles, config.alpha, config);
  const auto joined = join_outcomes(cc, outcomes);
  std::vector<PdiComponents> members;
  for (auto i : joined.members) members.push_back(cc.components[i]);
  const auto scores = pdi(members);
  std::vector<ZTriple> triples;
  for (const auto& s : scores) triples.push_back(z_triple(s));
  const auto grid = default_weight_grid();

  Table t;
  if (folds) {
    const auto cv = weight_cv(triples, joined.outcomes, *folds, grid, config.seed);
    t = Table{"weight_cv",
              {"fold", "n_heldout", "w_e", "w_p", "w_o", "rho_fitted_train", "rho_fitted_heldout",
               "rho_equal_heldout"},
              {},
              {}};
    for (const auto& f : cv) {
      t.rows.push_back({static_cast<double>(f.fold), static_cast<double>(f.held_out.size()),
                        f.fitted.w_e, f.fitted.w_p, f.fitted.w_o, cell(f.rho_fitted_train),
                        cell(f.rho_fitted_heldout), cell(f.rho_equal_heldout)});
    }
    t.notes.push_back("seed=" + std::to_string(config.seed));
  } else {
    t = Table{"weight_sweep", {"w_e", "w_p", "w_o", "n", "rho", "p_value"}, {}, {}};
    for (const auto& r : weight_sweep(triples, joined.outcomes, grid)) {
      const double n = static_cast<double>(triples.size());
      if (r.correlation) {
        t.rows.push_back({r.weights.w_e, r.weights.w_p, r.weights.w_o, n, r.correlation->rho,
                          r.correlation->p_value});
      } else {
        t.rows.push_back({r.weights.w_e, r.weights.w_p, r.weights.w_o, n, Cell(), Cell()});
      }
    }
  }
  t.notes.push_back("outcome=" + outcomes.column);
  return emit({std::move(t)}, config, std::move(loaded.warnings));
}

CommandResult cmd_simulate(const fs::path& scenario_path, const fs::path& out, bool pdi_enabled,
                           const RunConfig& config) {
  const auto scenario = parse_scenario(read_file(scenario_path));
  ScriptedWorld world(scenario);
  HarnessConfig hc;
  hc.n_max = scenario.n_max;
  hc.controller = config.controller();
  hc.pdi_enabled = pdi_enabled;
  const auto run = run_task(scenario.task, world.ports(), hc, config.seed);
  validate(run.bundle);
  if (!out.empty()) save_bundle(run.bundle, out);
  return {event_log(run.events), {}};
}

CommandResult cmd_calibrate(const fs::path& corpus, const RunConfig& config) {
  auto loaded = load_corpus(corpus, config);
  const auto ref = calibrate(loaded.bundles, config.alpha, config.tokenizer);
  Table t{"reference_stats", {"component", "mean", "std"}, {}, {}};
  t.rows.push_back({std::string("exec"), ref.exec.mean, ref.exec.std});
  t.rows.push_back({std::string("plan"), ref.plan.mean, ref.plan.std});
  t.rows.push_back({std::string("oss"), ref.oss.mean, ref.oss.std});
  return emit({std::move(t)}, config, std::move(loaded.warnings));
}

CommandResult cmd_cohort(const fs::path& corpus, const RunConfig& config) {
  auto loaded = load_corpus(corpus, config);
  const auto cohort = Cohort::from_bundles(loaded.bundles);
  const auto models = cohort.models();
  std::vector<Table> tables;

  Table means{"means", {"model", "condition", "mean_reward", "n_reward", "mean_gain", "n_gain"}, {}, {}};
  for (const auto& m : models) {
    for (auto cond : {Condition::Baseline, Condition::GeneratedSkill, Condition::HumanSkill}) {
      std::vector<Cell> row{m, std::string(condition_name(cond))};
      try {
        const auto r = mean_reward(cohort, m, cond);
        row.insert(row.end(), {r.value, static_cast<double>(r.n_tasks)});
      } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyCohort) throw;
        continue;
      }
      if (cond == Condition::Baseline) {
        row.insert(row.end(), {Cell(), Cell()});
      } else {
        try {
          const auto g = mean_gain(cohort, m, cond);
          row.insert(row.end(), {g.value, static_cast<double>(g.n_tasks)});
        } catch (const Error& e) {
          if (e.code() != ErrorCode::EmptyCohort) throw;
          row.insert(row.end(), {Cell(), Cell()});
        }
      }
      means.rows.push_back(std::move(row));
    }
  }
  tables.push_back(std::move(means));

  Table agree{"agreement", {"model_i", "model_j", "rate"}, {}, {}};
  for (const auto& mi : models) {
    for (const auto& mj : models) {
      Cell rate;
      try {
        rate = agreement_rate(cohort, mi, mj);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyEligibleSet) throw;
      }
      agree.rows.push_back({mi, mj, rate});
    }
  }
  tables.push_back(std::move(agree));

  const auto cc = cohort_components(loaded.bundles, config.alpha, config);
  const auto scores = pdi(cc.components);
  const auto labels = group_labels(cohort, scores);

  Table pg{"pass_gain", {"group", "model", "n_tasks", "rate"}, {}, {}};
  for (auto g : {TaskGroup::InteractionFree, TaskGroup::IterLowPdi, TaskGroup::IterHighPdi}) {
    std::vector<std::string> tasks;
    for (const auto& [task, label] : labels) {
      if (label == g) tasks.push_back(task);
    }
    for (const auto& m : models) {
      Cell rate;
      try {
        rate = pass_gain_rate(cohort, tasks, m);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyGroup) throw;
      }
      pg.rows.push_back({std::string(task_group_name(g)), m,
                         static_cast<double>(tasks.size()), rate});
    }
  }
  tables.push_back(std::move(pg));

  Table quad{"quadrants", {"plan_level", "exec_level", "n", "mean_gain", "mean_gap"}, {}, {}};
  std::vector<PdiComponents> qc;
  std::vector<double> gains, gaps;
  for (const auto& c : cc.components) {
    const auto g = task_gain(cohort, c.task_id, models);
    const auto h = task_gap(cohort, c.task_id, models);
    if (!g || !h) continue;
    qc.push_back(c);
    gains.push_back(*g);
    gaps.push_back(*h);
  }
  if (!qc.empty()) {
    const auto qt = quadrant_table(qc, gains, gaps);
    for (const auto& r : qt.rows) {
      quad.rows.push_back({std::string(level_name(r.plan_level)),
                           std::string(level_name(r.exec_level)), static_cast<double>(r.n),
                           cell(r.mean_gain), cell(r.mean_gap)});
    }
    quad.notes.push_back("plan_median=" + format_decimal(qt.plan_median) +
                         " exec_median=" + format_decimal(qt.exec_median));
    if (qt.degenerate_median) quad.notes.push_back("warning: DegenerateMedian");
  }
  tables.push_back(std::move(quad));

  Table bins{"attempt_bins", {"model", "attempts", "n_tasks", "mean_gain"}, {}, {}};
  for (const auto& b : attempt_bins(cohort)) {
    bins.rows.push_back({b.model, static_cast<double>(b.attempts),
                         static_cast<double>(b.n_tasks), b.mean_gain});
  }
  tables.push_back(std::move(bins));

  Table gap{"facts_strategy_gap", {"task_id", "gap"}, {}, {}};
  for (const auto& b : loaded.bundles) {
    if (b.memos.size() < 2) continue;
    gap.rows.push_back(
        {b.task_id, facts_strategy_gap(b.memos, config.alpha, trajectory_vocab(b, config.tokenizer),
                                       config.tokenizer)});
  }
  tables.push_back(std::move(gap));

  Table mw{"pdi_group_test", {"n_high", "n_low", "u", "p_value", "method"}, {}, {}};
  std::vector<double> high, low;
  for (const auto& s : scores) {
    const auto g = task_gain(cohort, s.components.task_id, models);
    if (!g) continue;
    (labels.at(s.components.task_id) == TaskGroup::IterHighPdi ? high : low).push_back(*g);
  }
  if (!high.empty() && !low.empty()) {
    const auto r = mann_whitney_u(high, low);
    mw.rows.push_back({static_cast<double>(high.size()), static_cast<double>(low.size()), r.u,
                       r.p_value, std::string(p_value_method_name(r.method))});
  } else {
    mw.notes.push_back("EmptyGroup: need tasks in both PDI groups");
  }
  tables.push_back(std::move(mw));

  return emit(std::move(tables), config, std::move(loaded.warnings));
}

}  // namespace pdi
