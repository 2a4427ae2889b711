#include "pdi/parsers.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstring>
#include <regex>

#include "pdi/errors.hpp"

namespace pdi {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

bool is_ident(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '_';
}

bool is_fence(std::string_view line) {
  const auto t = trim(line);
  return t.size() >= 3 && t.substr(0, 3) == "```";
}

struct Heading {
  int level = 0;
  std::string text;
};

// ATX heading with at most three leading spaces.
std::optional<Heading> heading_of(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && i < 3 && line[i] == ' ') ++i;
  std::size_t hashes = 0;
  while (i + hashes < line.size() && line[i + hashes] == '#') ++hashes;
  if (hashes == 0 || hashes > 6) return std::nullopt;
  const std::size_t rest = i + hashes;
  if (rest < line.size() && line[rest] != ' ' && line[rest] != '\t') {
    return std::nullopt;
  }
  std::string_view text = trim(line.substr(std::min(rest, line.size())));
  while (!text.empty() && text.back() == '#') text.remove_suffix(1);
  return Heading{static_cast<int>(hashes), std::string(trim(text))};
}

enum class MemoSection { AttemptsLog, Commands, VerifiedFacts, ErrorPattern, Strategy };

constexpr std::array<std::pair<std::string_view, MemoSection>, 5> kSections{{
    {kAttemptsLog, MemoSection::AttemptsLog},
    {kCommands, MemoSection::Commands},
    {kVerifiedFacts, MemoSection::VerifiedFacts},
    {kCurrentErrorPattern, MemoSection::ErrorPattern},
    {kNextStrategy, MemoSection::Strategy},
}};

// "Commands From Last Attempt" matches "Commands"; "Commandsfoo" does not.
std::optional<MemoSection> match_section(std::string_view heading) {
  const std::string h = lower(heading);
  for (const auto& [name, section] : kSections) {
    const std::string n = lower(name);
    if (h.size() >= n.size() && h.compare(0, n.size(), n) == 0 &&
        (h.size() == n.size() || !is_ident(h[n.size()]))) {
      return section;
    }
  }
  return std::nullopt;
}

std::string join_text(const std::vector<std::string_view>& lines) {
  std::size_t first = 0;
  std::size_t last = lines.size();
  while (first < last && trim(lines[first]).empty()) ++first;
  while (last > first && trim(lines[last - 1]).empty()) --last;
  std::string out;
  for (std::size_t i = first; i < last; ++i) {
    if (i > first) out.push_back('\n');
    out.append(lines[i]);
  }
  return std::string(trim(out));
}

std::vector<std::string> list_items(const std::vector<std::string_view>& lines) {
  std::vector<std::string> items;
  for (auto line : lines) {
    if (is_fence(line)) continue;
    const auto t = trim(line);
    if (t.empty()) continue;
    if (auto item = bullet_item(line)) {
      items.push_back(*item);
    } else if (items.empty()) {
      items.emplace_back(t);
    } else {
      items.back() += " ";
      items.back() += t;
    }
  }
  return items;
}

std::vector<std::string> command_lines(const std::vector<std::string_view>& lines) {
  std::vector<std::string> cmds;
  for (auto line : lines) {
    if (is_fence(line)) continue;
    const auto t = trim(line);
    if (t.empty()) continue;
    if (auto item = bullet_item(line)) {
      cmds.push_back(*item);
    } else {
      cmds.emplace_back(t);
    }
  }
  return cmds;
}

bool path_like(std::string_view content) {
  static const std::regex kPath(R"(^[\w.~-]*/[\w./~-]*$)");
  static const std::regex kFile(
      R"(^[\w-]+\.(csv|json|jsonl|txt|py|md|xlsx|xls|yaml|yml|toml|log|xml|html|png|jpg|pdf|wav|sh|parquet)$)");
  const std::string s(content);
  return !s.empty() && (std::regex_match(s, kPath) || std::regex_match(s, kFile));
}

bool is_assertion_line(std::string_view line) {
  static const std::regex kKeyword(R"((^|[^A-Za-z0-9_])(assert|expect|approx))");
  const std::string s(line);
  return std::regex_search(s, kKeyword);
}

std::string redact_line(std::string_view line) {
  std::string out;
  std::size_t i = 0;
  const std::size_t n = line.size();
  while (i < n) {
    const char c = line[i];
    if (c == '"' || c == '\'') {
      // Pull a string prefix (r, b, f, u, rb, ...) back out of `out`.
      std::size_t prefix = 0;
      while (prefix < 2 && prefix < out.size() &&
             std::strchr("rbfuRBFU", out[out.size() - 1 - prefix]) != nullptr) {
        ++prefix;
      }
      if (prefix > 0 && out.size() > prefix && is_ident(out[out.size() - 1 - prefix])) {
        prefix = 0;
      }
      const bool triple = i + 2 < n && line[i + 1] == c && line[i + 2] == c;
      const std::size_t qlen = triple ? 3 : 1;
      std::size_t j = i + qlen;
      std::size_t content_end = n;
      std::size_t end = n;
      while (j < n) {
        if (line[j] == '\\') {
          j += 2;
          continue;
        }
        if (line[j] == c && (!triple || (j + 2 < n && line[j + 1] == c && line[j + 2] == c))) {
          content_end = j;
          end = j + qlen;
          break;
        }
        ++j;
      }
      if (end > n) end = n;
      const auto content = line.substr(i + qlen, std::min(content_end, n) - (i + qlen));
      if (path_like(content)) {
        out.append(line.substr(i, end - i));
      } else {
        out.resize(out.size() - prefix);
        out.append(kRedactedToken);
      }
      i = end;
      continue;
    }
    const bool prev_ident = !out.empty() && (is_ident(out.back()) || out.back() == '.');
    const bool starts_number =
        std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(line[i + 1])));
    if (starts_number && !prev_ident) {
      std::size_t j = i;
      while (j < n) {
        const char d = line[j];
        if (is_ident(d) || d == '.') {
          ++j;
        } else if ((d == '+' || d == '-') && j > i &&
                   (line[j - 1] == 'e' || line[j - 1] == 'E') &&
                   !(j - i >= 2 && (line[i + 1] == 'x' || line[i + 1] == 'X'))) {
          ++j;
        } else {
          break;
        }
      }
      out.append(kRedactedToken);
      i = j;
      continue;
    }
    out.push_back(c);
    ++i;
  }
  return out;
}

}  // namespace

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    std::string_view line = text.substr(
        start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (nl == std::string_view::npos) {
      if (!line.empty()) lines.push_back(line);
      break;
    }
    lines.push_back(line);
    start = nl + 1;
  }
  return lines;
}

std::string_view trim(std::string_view s) {
  const auto ws = [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v';
  };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

std::optional<std::string> bullet_item(std::string_view line) {
  auto t = line;
  while (!t.empty() && (t.front() == ' ' || t.front() == '\t')) t.remove_prefix(1);
  if (t.empty()) return std::nullopt;
  std::size_t marker = 0;
  if (t.front() == '-' || t.front() == '*' || t.front() == '+') {
    marker = 1;
  } else {
    while (marker < t.size() && std::isdigit(static_cast<unsigned char>(t[marker]))) {
      ++marker;
    }
    if (marker == 0 || marker >= t.size() || (t[marker] != '.' && t[marker] != ')')) {
      return std::nullopt;
    }
    ++marker;
  }
  if (marker < t.size() && t[marker] != ' ' && t[marker] != '\t') return std::nullopt;
  return std::string(trim(t.substr(marker)));
}

Parsed<Memo> parse_memo(std::string_view text, bool strict) {
  if (trim(text).empty()) {
    throw Error(ErrorCode::EmptyInput, "memo text is empty");
  }
  Parsed<Memo> result;
  result.diagnostics.strict_mode = strict;
  Memo& memo = result.value;
  memo.raw_text = std::string(text);

  static const std::regex kHeader(
      R"(exploration\s+memo\s*\(\s*(\d+)\s+failed\s+attempts?\s*\))",
      std::regex::icase);

  std::array<std::optional<std::vector<std::string_view>>, 5> bodies;
  std::optional<std::size_t> current;
  std::optional<int> header_count;
  bool in_fence = false;
  const auto lines = split_lines(text);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const auto line = lines[ln];
    if (!in_fence) {
      if (auto h = heading_of(line); h && h->level >= 2) {
        if (auto section = match_section(h->text)) {
          const auto idx = static_cast<std::size_t>(*section);
          if (bodies[idx]) {
            result.diagnostics.warnings.push_back(
                {"line " + std::to_string(ln + 1),
                 "duplicate section '" + h->text + "' ignored"});
            current.reset();
          } else {
            bodies[idx].emplace();
            current = idx;
          }
          continue;
        }
        std::smatch m;
        const std::string heading_text = h->text;
        if (std::regex_search(heading_text, m, kHeader)) {
          header_count = std::stoi(m[1].str());
        } else {
          result.diagnostics.warnings.push_back(
              {"line " + std::to_string(ln + 1),
               "unrecognized heading '" + h->text + "'"});
        }
        current.reset();
        continue;
      }
    }
    if (is_fence(line)) in_fence = !in_fence;
    if (current) bodies[*current]->push_back(line);
  }

  for (std::size_t i = 0; i < kSections.size(); ++i) {
    if (bodies[i]) continue;
    const std::string name(kSections[i].first);
    if (strict) {
      throw Error(ErrorCode::MissingSection, "memo is missing section '" + name + "'");
    }
    result.diagnostics.warnings.push_back({"memo", "missing section '" + name + "'"});
    bodies[i].emplace();
  }

  memo.attempts_log = list_items(*bodies[0]);
  memo.commands = command_lines(*bodies[1]);
  memo.verified_facts = list_items(*bodies[2]);
  memo.current_error_pattern = join_text(*bodies[3]);
  memo.next_strategy = join_text(*bodies[4]);
  memo.attempt_count_header =
      header_count.value_or(static_cast<int>(memo.attempts_log.size()));
  return result;
}

std::string render_memo(const Memo& memo) {
  std::string out;
  out += "## Exploration Memo (" + std::to_string(memo.attempt_count_header) +
         " failed attempts)\n\n";
  out += "### Attempts Log\n";
  for (const auto& a : memo.attempts_log) out += "- " + a + "\n";
  out += "\n### Commands From Last Attempt\n";
  for (const auto& c : memo.commands) out += "- " + c + "\n";
  out += "\n### Verified Facts\n";
  for (const auto& f : memo.verified_facts) out += "- " + f + "\n";
  out += "\n### Current Error Pattern\n";
  if (!memo.current_error_pattern.empty()) out += memo.current_error_pattern + "\n";
  out += "\n### Next Strategy\n";
  if (!memo.next_strategy.empty()) out += memo.next_strategy + "\n";
  return out;
}

int count_numbered_steps(std::string_view text) {
  static const std::regex kStep(R"(^\s*\d+[.)])");
  int count = 0;
  bool in_fence = false;
  for (auto line : split_lines(text)) {
    if (is_fence(line)) {
      in_fence = !in_fence;
      continue;
    }
    if (in_fence) continue;
    const std::string s(line);
    if (std::regex_search(s, kStep)) ++count;
  }
  return count;
}

Parsed<SkillDocument> parse_skill(std::string_view text, bool strict) {
  Parsed<SkillDocument> result;
  result.diagnostics.strict_mode = strict;
  SkillDocument& doc = result.value;

  std::string_view body = text;
  const auto lines = split_lines(text);
  if (!lines.empty() && trim(lines[0]) == "---") {
    std::optional<std::size_t> close;
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto t = trim(lines[i]);
      if (t == "---" || t == "...") {
        close = i;
        break;
      }
    }
    if (close) {
      const auto& closing = lines[*close];
      std::size_t end = static_cast<std::size_t>(closing.data() - text.data()) + closing.size();
      if (end < text.size() && text[end] == '\r') ++end;
      if (end < text.size() && text[end] == '\n') ++end;
      doc.frontmatter_text = std::string(text.substr(0, end));
      body = text.substr(end);
      for (std::size_t i = 1; i < *close; ++i) {
        const auto colon = lines[i].find(':');
        if (colon == std::string_view::npos) continue;
        const auto key = trim(lines[i].substr(0, colon));
        if (key.empty()) continue;
        doc.frontmatter[std::string(key)] = std::string(trim(lines[i].substr(colon + 1)));
      }
    } else {
      result.diagnostics.warnings.push_back(
          {"line 1", "unterminated frontmatter block treated as body"});
    }
  }
  doc.body_text = std::string(body);

  const std::string_view b = doc.body_text;
  const auto body_lines = split_lines(b);
  bool in_fence = false;
  std::size_t fence_start = 0;
  std::optional<SkillSection> section;
  std::vector<std::string_view> section_lines;
  const auto flush = [&] {
    if (section) {
      section->text = join_text(section_lines);
      doc.sections.push_back(std::move(*section));
    }
    section.reset();
    section_lines.clear();
  };
  for (std::size_t ln = 0; ln < body_lines.size(); ++ln) {
    const auto line = body_lines[ln];
    const auto offset = static_cast<std::size_t>(line.data() - b.data());
    if (is_fence(line)) {
      if (!in_fence) {
        fence_start = b.find('\n', offset);
        fence_start = fence_start == std::string_view::npos ? b.size() : fence_start + 1;
      } else {
        doc.code_blocks.emplace_back(b.substr(fence_start, offset - fence_start));
      }
      in_fence = !in_fence;
      section_lines.push_back(line);
      continue;
    }
    if (!in_fence) {
      if (auto h = heading_of(line)) {
        flush();
        section = SkillSection{h->text, h->level, {}};
        continue;
      }
    }
    section_lines.push_back(line);
  }
  if (in_fence) {
    if (strict) {
      throw Error(ErrorCode::UnterminatedCodeFence, "skill has an unterminated code fence");
    }
    result.diagnostics.warnings.push_back({"skill", "unterminated code fence"});
    doc.code_blocks.emplace_back(b.substr(std::min(fence_start, b.size())));
  }
  flush();
  doc.numbered_step_count = count_numbered_steps(b);
  return result;
}

std::string redact_answers(std::string_view verifier_text) {
  std::string out;
  out.reserve(verifier_text.size());
  std::size_t start = 0;
  while (start < verifier_text.size()) {
    auto nl = verifier_text.find('\n', start);
    const bool has_nl = nl != std::string_view::npos;
    if (!has_nl) nl = verifier_text.size();
    const auto line = verifier_text.substr(start, nl - start);
    if (is_assertion_line(line)) {
      out += redact_line(line);
    } else {
      out.append(line);
    }
    if (has_nl) out.push_back('\n');
    start = nl + 1;
  }
  return out;
}

}  // namespace pdi
