#include <algorithm>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "pdi/errors.hpp"
#include "pdi/parsers.hpp"
#include "pdi/pdi_engine.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace pdi {
namespace {

using fixtures::make_memo;
using fixtures::make_skill;

// Two failed attempts then success; memo texts are set by the caller.
TrajectoryBundle small_bundle(std::vector<Memo> memos, std::vector<std::string> solved_cmds,
                              const std::string& skill_body,
                              std::vector<TestSummary> tests = {}) {
  TrajectoryBundle b;
  b.task_id = "small";
  for (std::size_t i = 0; i < memos.size(); ++i) {
    const TestSummary t = i < tests.size() ? tests[i] : TestSummary{{"test_a", false}};
    b.attempts.push_back({static_cast<int>(i + 1), {"ls"}, "", 0.0, t, {}});
  }
  const int k = static_cast<int>(memos.size()) + 1;
  b.attempts.push_back({k, std::move(solved_cmds), "", 1.0, {{"test_a", true}}, {}});
  b.memos = std::move(memos);
  b.solved_at = k;
  b.skill = make_skill(skill_body);
  return b;
}

Memo memo(int k, std::vector<std::string> facts, std::string strategy) {
  return make_memo(k, {"Attempt " + std::to_string(k)}, {"ls"}, std::move(facts), "err",
                   std::move(strategy));
}

TEST(PhiPlan, IdenticalStrategyAndSkill) {
  const auto b = small_bundle({memo(1, {"x"}, "read the csv"), memo(2, {"x"}, "fix header")},
                              {"python run.py"}, "read the csv\nfix header\n");
  EXPECT_NEAR(phi_plan(b), 1.0, 1e-15);
}

TEST(PhiPlan, NearDisjoint) {
  const auto b = small_bundle({memo(1, {}, "alpha beta")}, {"gamma"}, "gamma delta");
  EXPECT_NEAR(phi_plan(b, 1e-9), 0.0, 1e-6);
}

TEST(PhiPlan, NoStrategyThrows) {
  const auto b = small_bundle({memo(1, {"x"}, "")}, {"a"}, "a");
  try {
    phi_plan(b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoStrategyText);
  }
}

TEST(PhiExec, IdenticalCommandsAndSkill) {
  const auto b = small_bundle({memo(1, {"x"}, "s")}, {"pytest -q", "python solve.py"},
                              "pytest -q\npython solve.py\n");
  EXPECT_NEAR(phi_exec(b), 1.0, 1e-15);
}

TEST(PhiExec, EmptyCommandsStillDefined) {
  const auto b = small_bundle({memo(1, {"x"}, "s")}, {}, "some body");
  const double v = phi_exec(b);
  EXPECT_GT(v, 0.0);
  EXPECT_LT(v, 1.0);
}

TEST(PhiExec, UnsolvedAndSkilllessThrow) {
  auto b = small_bundle({memo(1, {"x"}, "s")}, {"a"}, "a");
  auto no_skill = b;
  no_skill.skill.reset();
  EXPECT_THROW(phi_exec(no_skill), Error);
  auto unsolved = b;
  unsolved.solved_at.reset();
  unsolved.attempts.back().reward = 0.5;
  EXPECT_THROW(phi_exec(unsolved), Error);
}

TEST(PhiOss, IdenticalHistoryIsOne) {
  const auto b = small_bundle({memo(1, {"f1", "f2"}, "s"), memo(2, {"f1", "f2"}, "t"),
                               memo(3, {"f1", "f2"}, "u")},
                              {"a"}, "a b");
  EXPECT_NEAR(phi_oss(b), 1.0, 1e-15);
}

TEST(PhiOss, NearDisjointHistoryIsZero) {
  const auto b = small_bundle({memo(1, {"apple pear"}, "s"), memo(2, {"cherry plum"}, "s")},
                              {"a"}, "a",
                              {TestSummary{{"test_x", false}}, TestSummary{{"test_y", false}}});
  EXPECT_NEAR(phi_oss(b, 1e-9), 0.0, 1e-6);
}

TEST(PhiOss, ThreeMemosAverageOfFourPsi) {
  const std::vector<TestSummary> tests = {{{"t1", false}, {"t2", false}},
                                          {{"t1", false}, {"t2", true}},
                                          {{"t3", false}, {"t1", false}}};
  const auto b = small_bundle({memo(1, {"a b"}, "s one"), memo(2, {"a b", "c"}, "s two"),
                               memo(3, {"c d"}, "s three")},
                              {"cmd x"}, "skill body text", tests);
  // Vocabulary by hand: body, strategies, facts, solved commands, test ids.
  const std::vector<std::string> vocab = {"a",  "b",  "body", "c",     "cmd",   "d",   "one",
                                          "s",  "skill", "t1", "t2",  "t3",    "text", "three",
                                          "two", "x"};
  const double alpha = 0.01;
  const auto psi = [&](std::vector<std::string> p, std::vector<std::string> q) {
    return 1.0 - oracle::jsd(p, q, vocab, alpha);
  };
  const double facts = (psi({"a", "b"}, {"a", "b", "c"}) + psi({"a", "b", "c"}, {"c", "d"})) / 2;
  const double failed = (psi({"t1", "t2"}, {"t1"}) + psi({"t1"}, {"t3", "t1"})) / 2;
  EXPECT_NEAR(phi_oss(b, alpha), 0.5 * facts + 0.5 * failed, 1e-12);
  EXPECT_EQ(trajectory_vocab(b)->tokens(), vocab);
}

TEST(PhiOss, InsufficientHistory) {
  const auto b = small_bundle({memo(1, {"x"}, "s")}, {"a"}, "a");
  EXPECT_THROW(phi_oss(b), Error);
  EXPECT_FALSE(compute_components(b).phi_oss);
}

PdiComponents comp(const char* id, double e, double p, std::optional<double> o) {
  PdiComponents c;
  c.task_id = id;
  c.phi_exec = e;
  c.phi_plan = p;
  c.phi_oss = o;
  return c;
}

TEST(Pdi, ArithmeticAndFlags) {
  // exec {0,1,2} -> z {-1.22, 0, 1.22}; plan constant -> degenerate
  const std::vector<PdiComponents> cohort = {comp("a", 0, 0.5, 0.1), comp("b", 1, 0.5, 0.3),
                                             comp("c", 2, 0.5, std::nullopt)};
  const auto s = pdi(cohort);
  EXPECT_EQ(s[1].z_exec, 0.0);
  for (const auto& x : s) {
    EXPECT_EQ(x.z_plan, 0.0);
    EXPECT_NE(std::find(x.flags.begin(), x.flags.end(), "degenerate_plan"), x.flags.end());
    EXPECT_EQ(x.pdi, x.z_exec - x.z_plan - x.z_oss);
  }
  EXPECT_EQ(s[0].z_oss, -1.0);
  EXPECT_EQ(s[1].z_oss, 1.0);
  EXPECT_EQ(s[2].z_oss, 0.0);
  EXPECT_NE(std::find(s[2].flags.begin(), s[2].flags.end(), "oss_absent"), s[2].flags.end());
}

TEST(Pdi, UnitExecGivesUnitPdi) {
  ZTriple z{1.0, 0.0, 0.0};
  EXPECT_EQ(composite(z, {1, 1, 1}), 1.0);
}

TEST(Pdi, PermutationEquivariance) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<PdiComponents> c;
  for (int i = 0; i < 9; ++i) c.push_back(comp("t", u(rng), u(rng), u(rng)));
  const auto base = pdi(c);
  auto swapped = c;
  std::swap(swapped[2], swapped[6]);
  const auto s = pdi(swapped);
  EXPECT_EQ(s[2].pdi, base[6].pdi);
  EXPECT_EQ(s[6].pdi, base[2].pdi);
  EXPECT_EQ(s[0].pdi, base[0].pdi);
}

TEST(Pdi, FiveMemberRecomputation) {
  const std::vector<PdiComponents> c = {comp("a", .9, .2, .3), comp("b", .4, .6, .5),
                                        comp("c", .7, .1, .9), comp("d", .2, .8, .2),
                                        comp("e", .5, .5, .6)};
  const auto z = [](std::vector<double> v) {
    long double m = 0, s = 0;
    for (double x : v) m += x;
    m /= 5;
    for (double x : v) s += (x - m) * (x - m);
    const long double sd = std::sqrt(s / 5);
    std::vector<double> out;
    for (double x : v) out.push_back(static_cast<double>((x - m) / sd));
    return out;
  };
  const auto ze = z({.9, .4, .7, .2, .5}), zp = z({.2, .6, .1, .8, .5}), zo = z({.3, .5, .9, .2, .6});
  const auto s = pdi(c);
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(s[i].pdi, ze[i] - zp[i] - zo[i], 1e-12);
}

TEST(AlphaSweep, ConstantOutcomesAreDegenerate) {
  const auto cohort = fixtures::alpha_invariant_cohort();
  const std::vector<double> outcomes(cohort.size(), 1.0);
  const std::vector<double> alphas = {0.001, 0.1};
  for (const auto& row : alpha_sweep(cohort, alphas, outcomes)) EXPECT_FALSE(row.correlation);
  EXPECT_THROW(alpha_sweep(cohort, alphas, std::vector<double>{1.0}), Error);
}

TEST(AlphaSweep, GridContents) {
  const auto g = default_alpha_grid();
  EXPECT_EQ(g.size(), 16u);
  EXPECT_TRUE(std::is_sorted(g.begin(), g.end()));
  EXPECT_EQ(g.front(), 1e-10);
  EXPECT_EQ(g.back(), 10.0);
  EXPECT_NE(std::find(g.begin(), g.end(), kDefaultAlpha), g.end());
}

TEST(WeightGrid, EnumerationOracle) {
  std::set<std::tuple<double, double, double>> want;
  for (double e : {0.5, 1.0, 1.5}) {
    for (double p : {0.0, 0.5, 1.0, 1.5}) {
      for (double o : {0.0, 0.5, 1.0, 1.5}) want.insert({e, p, o});
    }
  }
  std::set<std::tuple<double, double, double>> got;
  for (const auto& w : default_weight_grid()) got.insert({w.w_e, w.w_p, w.w_o});
  EXPECT_EQ(got, want);
  EXPECT_EQ(default_weight_grid().size(), want.size());
}

TEST(WeightSweep, ScalingLeavesRhoUnchanged) {
  std::mt19937_64 rng(32);
  std::normal_distribution<double> nd;
  std::vector<ZTriple> z;
  std::vector<double> y;
  for (int i = 0; i < 15; ++i) {
    z.push_back({nd(rng), nd(rng), nd(rng)});
    y.push_back(nd(rng));
  }
  const std::vector<WeightVector> grid = {{1, 0.5, 1.5}, {2, 1, 3}, {0.5, 0.25, 0.75}};
  const auto rows = weight_sweep(z, y, grid);
  EXPECT_EQ(rows[0].correlation->rho, rows[1].correlation->rho);
  EXPECT_EQ(rows[0].correlation->rho, rows[2].correlation->rho);
  const std::vector<WeightVector> bad = {{0, 1, 1}};
  EXPECT_THROW(weight_sweep(z, y, bad), Error);
}

TEST(Folds, PartitionAndDeterminism) {
  const auto f = assign_folds(4, 2, 7);
  ASSERT_EQ(f.size(), 2u);
  EXPECT_EQ(f[0].size(), 2u);
  EXPECT_EQ(f[1].size(), 2u);
  EXPECT_EQ(assign_folds(4, 2, 7), f);
  for (std::size_t n = 2; n < 30; ++n) {
    for (std::size_t k = 2; k <= n; k += 3) {
      const auto folds = assign_folds(n, k, n * 31 + k);
      std::vector<std::size_t> all;
      for (const auto& g : folds) {
        EXPECT_FALSE(g.empty());
        all.insert(all.end(), g.begin(), g.end());
      }
      std::sort(all.begin(), all.end());
      for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(all[i], i);
    }
  }
  EXPECT_THROW(assign_folds(3, 1, 0), Error);
  EXPECT_THROW(assign_folds(3, 4, 0), Error);
}

TEST(WeightCv, DeterministicUnderSeed) {
  std::mt19937_64 rng(33);
  std::normal_distribution<double> nd;
  std::vector<ZTriple> z;
  std::vector<double> y;
  for (int i = 0; i < 12; ++i) {
    z.push_back({nd(rng), nd(rng), nd(rng)});
    y.push_back(nd(rng));
  }
  const auto grid = default_weight_grid();
  const auto a = weight_cv(z, y, 3, grid, 5);
  const auto b = weight_cv(z, y, 3, grid, 5);
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].held_out, b[i].held_out);
    EXPECT_EQ(a[i].fitted, b[i].fitted);
    EXPECT_EQ(a[i].rho_fitted_heldout, b[i].rho_fitted_heldout);
  }
}

}  // namespace
}  // namespace pdi
