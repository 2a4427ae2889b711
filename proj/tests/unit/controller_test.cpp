#include <cmath>
#include <random>

#include <json.hpp>
#include <gtest/gtest.h>

#include "pdi/controller.hpp"
#include "pdi/errors.hpp"
#include "pdi/parsers.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace pdi {
namespace {

using fixtures::make_memo;

Memo memo(std::vector<std::string> cmds, std::vector<std::string> facts, std::string strategy) {
  return make_memo(1, {"Attempt 1"}, std::move(cmds), std::move(facts), "err",
                   std::move(strategy));
}

TEST(StepProxy, FirstStepIsExecOnly) {
  ControllerConfig cfg;
  const auto m = memo({"pytest -q"}, {"a"}, "try b");
  const std::vector<std::string> cmds = {"pytest -q"};
  const auto c = step_components(m, nullptr, cmds, {}, nullptr, cfg);
  EXPECT_FALSE(c.has_history);
  EXPECT_EQ(c.phi_plan, 0.0);
  EXPECT_EQ(c.phi_oss, 0.0);
  EXPECT_NEAR(c.phi_exec, 1.0, 1e-15);
  EXPECT_EQ(c.raw_pdi, (c.phi_exec - 0.5) / 0.25);
}

TEST(StepProxy, StuckMemosAreStronglyNegative) {
  ControllerConfig cfg;
  const auto m = memo({"python a.py"}, {"col is int", "no nulls"}, "cast the column");
  const TestSummary t = {{"test_x", false}, {"test_y", true}};
  const std::vector<std::string> cmds = {"cat data.csv"};
  const auto c = step_components(m, &m, cmds, t, &t, cfg);
  EXPECT_NEAR(c.phi_plan, 1.0, 1e-15);
  EXPECT_NEAR(c.phi_oss, 1.0, 1e-15);
  // Oracle: step vocabulary built by hand.
  const std::vector<std::string> vocab = {"a", "cast", "cat", "col", "column", "csv", "data",
                                          "int", "is", "no", "nulls", "py", "python", "test_x",
                                          "the"};
  const double exec = 1.0 - oracle::jsd(oracle::tokens("cat data.csv"),
                                        oracle::tokens("python a.py"), vocab, cfg.alpha);
  EXPECT_NEAR(c.phi_exec, exec, 1e-12);
  EXPECT_NEAR(c.raw_pdi, (exec - 0.5) / 0.25 - 2.0 - 2.0, 1e-11);
  EXPECT_LT(c.raw_pdi, -3.0);
}

TEST(StepProxy, EmptyStepVocabulary) {
  ControllerConfig cfg;
  const auto m = memo({}, {}, "");
  const auto c = step_components(m, &m, {}, {}, nullptr, cfg);
  EXPECT_EQ(c.phi_exec, 1.0);
  EXPECT_EQ(c.phi_plan, 1.0);
  EXPECT_EQ(c.phi_oss, 1.0);
}

TEST(Observe, WarmupWeights) {
  EXPECT_EQ(warmup_weight(1, 2), 0.5);
  EXPECT_EQ(warmup_weight(2, 2), 1.0);
  EXPECT_EQ(warmup_weight(3, 2), 1.0);
  EXPECT_EQ(warmup_weight(1, 3), 1.0 / 3.0);
}

std::vector<TriggerLevel> triggers(const std::vector<double>& raw, ControllerConfig cfg = {}) {
  InterventionState s;
  std::vector<TriggerLevel> out;
  for (double r : raw) {
    auto o = observe(s, r, cfg);
    EXPECT_EQ(o.state.proxy_history.back(), o.event.d_hat);
    s = o.state;
    out.push_back(o.event.trigger);
  }
  return out;
}

using T = TriggerLevel;

TEST(Observe, EscalationPattern) {
  EXPECT_EQ(triggers({0, 0, 0, -1, -1}), (std::vector<T>{T::None, T::None, T::None, T::Soft, T::Strong}));
  EXPECT_EQ(triggers({0, 0, -0.6, 0.1, -0.6}),
            (std::vector<T>{T::None, T::None, T::Soft, T::None, T::Soft}));
  // After a strong the run starts over.
  EXPECT_EQ(triggers({-2, -2, -2, -2}), (std::vector<T>{T::Soft, T::Strong, T::Soft, T::Strong}));
}

TEST(Observe, WarmupDampsEarlySteps) {
  // -0.8 at k=1 becomes -0.4, above tau.
  EXPECT_EQ(triggers({-0.8, -0.8}), (std::vector<T>{T::None, T::Soft}));
  EXPECT_EQ(triggers({-0.5}, {}), (std::vector<T>{T::None}));
}

TEST(Observe, ThresholdIsStrict) {
  ControllerConfig cfg;
  cfg.warmup_W = 1;
  EXPECT_EQ(triggers({-0.5, -0.5000001}, cfg), (std::vector<T>{T::None, T::Soft}));
}

TEST(Observe, InvariantOnRandomSequences) {
  // Every strong is immediately preceded by a soft; no strong without it.
  std::mt19937_64 rng(41);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> raw(1 + rng() % 12);
    for (auto& r : raw) r = nd(rng);
    const auto t = triggers(raw);
    for (std::size_t k = 0; k < t.size(); ++k) {
      if (t[k] == T::Strong) {
        ASSERT_GT(k, 0u);
        EXPECT_EQ(t[k - 1], T::Soft);
      }
    }
  }
}

TEST(Directive, StrongClearsStrategy) {
  const auto m = memo({"a"}, {"f"}, "go left");
  const auto d = apply_directive(make_directive(T::Strong), m);
  EXPECT_EQ(d.memo.next_strategy, "");
  EXPECT_EQ(parse_memo(d.memo.raw_text, true).value.next_strategy, "");
  EXPECT_EQ(d.memo.verified_facts, m.verified_facts);
  const auto again = apply_directive(make_directive(T::Strong), d.memo);
  EXPECT_EQ(again.memo, d.memo);
}

TEST(Directive, SoftAndNoneKeepMemo) {
  const auto m = memo({"a"}, {"f"}, "go left");
  EXPECT_EQ(apply_directive(make_directive(T::Soft), m).memo.raw_text, m.raw_text);
  const auto none = apply_directive(make_directive(T::None), m);
  EXPECT_EQ(none.memo, m);
  EXPECT_TRUE(none.annotations.empty());
}

TEST(EventLog, JsonLine) {
  const ControllerEvent e{3, -1.25, 1.0, -1.25, T::Soft};
  const auto j = nlohmann::json::parse(event_json_line(e));
  EXPECT_EQ(j["step"], 3);
  EXPECT_EQ(j["trigger"], "soft");
  EXPECT_EQ(j["d_hat"].get<double>(), -1.25);
}

TEST(Config, Validation) {
  ControllerConfig c;
  EXPECT_NO_THROW(validate(c));
  c.warmup_W = 0;
  EXPECT_THROW(validate(c), Error);
  c = {};
  c.reference_stats.plan.std = 0.0;
  EXPECT_THROW(validate(c), Error);
}

TEST(Calibrate, StatsFromReplay) {
  auto cohort = fixtures::synthetic_cohort(5, 12);
  // Fixture memos echo their attempt's commands; vary some so exec spreads.
  for (auto& b : cohort) {
    for (std::size_t i = 0; i < b.memos.size(); i += 2) b.memos[i].commands = {"make clean"};
  }
  const auto ref = calibrate(cohort, 0.002);
  EXPECT_GT(ref.exec.std, 0.0);
  EXPECT_GT(ref.plan.std, 0.0);
  EXPECT_GT(ref.oss.std, 0.0);
  EXPECT_GE(ref.plan.mean, 0.0);
  EXPECT_LE(ref.plan.mean, 1.0);
  try {
    calibrate(std::vector<TrajectoryBundle>{}, 0.002);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateCohort);
  }
}

}  // namespace
}  // namespace pdi
