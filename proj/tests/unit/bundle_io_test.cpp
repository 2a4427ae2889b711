#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "pdi/bundle_io.hpp"
#include "pdi/errors.hpp"
#include "support/fixtures.hpp"

namespace pdi {
namespace {

using fixtures::TempDir;

TrajectoryBundle three_attempts() {
  std::mt19937_64 rng(21);
  return fixtures::random_bundle(rng, "three", 3, true);
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

TEST(Trajectory, ModeAndSolvedAt) {
  const auto b = three_attempts();
  EXPECT_EQ(b.solved_at, 3);
  EXPECT_EQ(b.mode_label(), ModeLabel::Iterative);
  std::mt19937_64 rng(22);
  const auto one = fixtures::random_bundle(rng, "one", 1, true);
  EXPECT_EQ(one.mode_label(), ModeLabel::InteractionFree);
  EXPECT_TRUE(one.memos.empty());
  const auto none = fixtures::random_bundle(rng, "none", 7, false);
  EXPECT_EQ(none.memos.size(), 7u);
  EXPECT_FALSE(none.solved_at);
  EXPECT_FALSE(none.mode_label());
}

TEST(Trajectory, ValidateRejectsBrokenInvariants) {
  auto b = three_attempts();
  EXPECT_NO_THROW(validate(b));
  auto bad = b;
  bad.attempts[1].reward = 1.5;
  EXPECT_THROW(validate(bad), Error);
  bad = b;
  bad.attempts[2].index = 2;
  EXPECT_THROW(validate(bad), Error);
  bad = b;
  bad.attempts[0].test_summary.push_back(bad.attempts[0].test_summary.front());
  EXPECT_THROW(validate(bad), Error);
  bad = b;
  bad.solved_at = 2;
  EXPECT_THROW(validate(bad), Error);
  bad = b;
  bad.memos.push_back(bad.memos.back());
  EXPECT_THROW(validate(bad), Error);
}

TEST(BundleIo, DirectoryAndArchiveRoundTrip) {
  TempDir tmp;
  std::mt19937_64 rng(23);
  for (int i = 0; i < 30; ++i) {
    const int attempts = 1 + static_cast<int>(rng() % 7);
    auto b = fixtures::random_bundle(rng, "rt" + std::to_string(i), attempts, rng() % 2 == 0);
    b.attempts[0].wall_time_sec = 0.1 * i;
    b.evaluations.push_back({b.task_id, "m", Condition::HumanSkill, 0.3});
    save_bundle(b, tmp.path() / b.task_id);
    save_bundle(b, tmp.path() / (b.task_id + ".json"));
    EXPECT_EQ(load_bundle(tmp.path() / b.task_id), b);
    EXPECT_EQ(load_bundle(tmp.path() / (b.task_id + ".json")), b);
  }
}

TEST(BundleIo, MissingSkillRoundTripsAbsent) {
  TempDir tmp;
  std::mt19937_64 rng(24);
  auto b = fixtures::random_bundle(rng, "noskill", 4, false);
  save_bundle(b, tmp.path() / "noskill");
  EXPECT_FALSE(load_bundle(tmp.path() / "noskill").skill);
}

TEST(BundleIo, NonUtf8BytesSurvive) {
  TempDir tmp;
  auto b = three_attempts();
  std::string raw = "ok \xff\xfe bytes \xc3\x28 and \\x41 literal\r\n\0end";
  raw.push_back('\0');
  b.attempts[0].stdout_text = raw;
  b.attempts[1].commands = {"echo \x80", "multi\nline \\ cmd"};
  for (const char* name : {"dir", "arch.json"}) {
    save_bundle(b, tmp.path() / name);
    const auto back = load_bundle(tmp.path() / name);
    ASSERT_EQ(back.attempts[0].stdout_text.size(), raw.size());
    EXPECT_EQ(back.attempts[0].stdout_text, raw);
    EXPECT_EQ(back.attempts[1].commands, b.attempts[1].commands);
  }
}

TEST(BundleIo, EscapingIsLossless) {
  std::mt19937_64 rng(25);
  for (int i = 0; i < 500; ++i) {
    std::string s(rng() % 40, '\0');
    for (auto& c : s) c = static_cast<char>(rng() % 256);
    EXPECT_EQ(unescape_bytes(escape_bytes(s)), s);
    EXPECT_EQ(unescape_line(escape_line(s)), s);
    EXPECT_EQ(escape_line(s).find('\n'), std::string::npos);
  }
}

TEST(BundleIo, DecimalRoundTrip) {
  std::mt19937_64 rng(26);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng);
    EXPECT_EQ(parse_decimal(format_decimal(v), "v"), v);
  }
  EXPECT_EQ(format_decimal(0.5), "0.5");
  EXPECT_THROW(parse_decimal("0.5x", "reward"), Error);
}

TEST(BundleIo, ErrorsNameTheProblem) {
  TempDir tmp;
  const auto b = three_attempts();
  const auto dir = tmp.path() / "b";
  save_bundle(b, dir);

  EXPECT_EQ(code_of([&] { load_bundle(tmp.path() / "missing"); }), ErrorCode::IoFailure);

  const auto meta = read_file(dir / "bundle.json");
  write_file(dir / "bundle.json", "{\"attempts\": []}");
  EXPECT_EQ(code_of([&] { load_bundle(dir); }), ErrorCode::MissingField);

  write_file(dir / "bundle.json", "{ not json");
  try {
    load_bundle(dir);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("bundle.json"), std::string::npos);
  }

  write_file(dir / "bundle.json", meta);
  write_file(dir / "memos" / "memo_1.md", "no headings at all\n");
  EXPECT_EQ(code_of([&] { load_bundle(dir); }), ErrorCode::MemoParseFailure);
}

}  // namespace
}  // namespace pdi
