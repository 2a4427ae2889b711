#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pdi/trajectory.hpp"

namespace pdi {

struct ParseWarning {
  std::string location;
  std::string message;
  bool operator==(const ParseWarning&) const = default;
};

struct ParseDiagnostics {
  std::vector<ParseWarning> warnings;
  bool strict_mode = false;
};

template <typename T>
struct Parsed {
  T value;
  ParseDiagnostics diagnostics;
};

// Canonical memo section names, in template order.
inline constexpr std::string_view kAttemptsLog = "Attempts Log";
inline constexpr std::string_view kCommands = "Commands";
inline constexpr std::string_view kVerifiedFacts = "Verified Facts";
inline constexpr std::string_view kCurrentErrorPattern = "Current Error Pattern";
inline constexpr std::string_view kNextStrategy = "Next Strategy";

// Splits a memo into its five sections by heading (level >= 2,
// case-insensitive prefix match). Missing sections become empty plus a
// warning; in strict mode they throw MissingSection. Blank input throws
// EmptyInput.
Parsed<Memo> parse_memo(std::string_view text, bool strict);

// Renders the canonical memo template. parse_memo(render_memo(m)) yields
// the same sections as m.
std::string render_memo(const Memo& memo);

// Frontmatter, heading sections, fenced code blocks and numbered steps.
// An unterminated fence is a warning, or UnterminatedCodeFence when strict.
Parsed<SkillDocument> parse_skill(std::string_view text, bool strict = false);

// Lines matching ^\s*\d+[.)] outside fenced code blocks.
int count_numbered_steps(std::string_view text);

// Returns the text of a bullet (`-`, `*`, `1.`, `1)`) with the marker
// stripped, or nullopt when the line is not a bullet.
std::optional<std::string> bullet_item(std::string_view line);

// Replaces string and numeric literals on assertion lines with
// kRedactedToken. Path-like string literals are kept.
inline constexpr std::string_view kRedactedToken = "<REDACTED>";
std::string redact_answers(std::string_view verifier_text);

// Line utilities shared with the feature extractor.
std::vector<std::string_view> split_lines(std::string_view text);
std::string_view trim(std::string_view s);

}  // namespace pdi
