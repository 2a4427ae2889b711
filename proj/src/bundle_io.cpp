#include "pdi/bundle_io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "pdi/errors.hpp"
#include "pdi/parsers.hpp"

namespace pdi {
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kArchiveEncoding = "escaped-bytes-v1";

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw Error(ErrorCode::MissingField, where + ": missing field '" + key + "'");
  }
  return obj.at(key);
}

double read_real(const json& value, const std::string& where) {
  if (value.is_string()) return parse_decimal(value.get<std::string>(), where);
  if (value.is_number()) return value.get<double>();
  throw Error(ErrorCode::MalformedAttempt, where + ": expected a decimal value");
}

std::size_t utf8_sequence_length(std::string_view s, std::size_t i) {
  const auto c = static_cast<unsigned char>(s[i]);
  std::size_t len = 0;
  unsigned min_cp = 0;
  unsigned cp = 0;
  if (c < 0x80) return 1;
  if ((c & 0xE0) == 0xC0) {
    len = 2;
    cp = c & 0x1F;
    min_cp = 0x80;
  } else if ((c & 0xF0) == 0xE0) {
    len = 3;
    cp = c & 0x0F;
    min_cp = 0x800;
  } else if ((c & 0xF8) == 0xF0) {
    len = 4;
    cp = c & 0x07;
    min_cp = 0x10000;
  } else {
    return 0;
  }
  if (i + len > s.size()) return 0;
  for (std::size_t k = 1; k < len; ++k) {
    const auto cc = static_cast<unsigned char>(s[i + k]);
    if ((cc & 0xC0) != 0x80) return 0;
    cp = (cp << 6) | (cc & 0x3F);
  }
  if (cp < min_cp || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return 0;
  return len;
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

json bundle_metadata(const TrajectoryBundle& bundle) {
  json meta;
  meta["task_id"] = bundle.task_id;
  json attempts = json::array();
  for (const auto& a : bundle.attempts) {
    json ja;
    ja["index"] = a.index;
    ja["reward"] = format_decimal(a.reward);
    if (a.wall_time_sec) ja["wall_time_sec"] = format_decimal(*a.wall_time_sec);
    json tests = json::array();
    for (const auto& t : a.test_summary) {
      tests.push_back({{"name", t.name}, {"passed", t.passed}});
    }
    ja["test_summary"] = std::move(tests);
    attempts.push_back(std::move(ja));
  }
  meta["attempts"] = std::move(attempts);
  if (bundle.solved_at) meta["solved_at"] = *bundle.solved_at;
  json evals = json::array();
  for (const auto& e : bundle.evaluations) {
    evals.push_back({{"model_id", e.model_id},
                     {"condition", std::string(condition_name(e.condition))},
                     {"reward", format_decimal(e.reward)}});
  }
  meta["evaluations"] = std::move(evals);
  return meta;
}

// Fills everything except attempt texts, memos and the skill.
TrajectoryBundle bundle_from_metadata(const json& meta, const std::string& where) {
  TrajectoryBundle b;
  const auto& task = require(meta, "task_id", where);
  if (!task.is_string()) {
    throw Error(ErrorCode::MissingField, where + ": task_id must be a string");
  }
  b.task_id = task.get<std::string>();
  const auto& attempts = require(meta, "attempts", where);
  if (!attempts.is_array()) {
    throw Error(ErrorCode::MalformedAttempt, where + ": attempts must be an array");
  }
  for (std::size_t i = 0; i < attempts.size(); ++i) {
    const std::string at = where + " attempts[" + std::to_string(i) + "]";
    const auto& ja = attempts[i];
    Attempt a;
    const auto& idx = require(ja, "index", at);
    if (!idx.is_number_integer()) {
      throw Error(ErrorCode::MalformedAttempt, at + ".index must be an integer");
    }
    a.index = idx.get<int>();
    a.reward = read_real(require(ja, "reward", at), at + ".reward");
    if (ja.contains("wall_time_sec") && !ja.at("wall_time_sec").is_null()) {
      a.wall_time_sec = read_real(ja.at("wall_time_sec"), at + ".wall_time_sec");
    }
    const auto& tests = require(ja, "test_summary", at);
    if (!tests.is_array()) {
      throw Error(ErrorCode::MalformedAttempt, at + ".test_summary must be an array");
    }
    for (std::size_t t = 0; t < tests.size(); ++t) {
      const std::string tt = at + ".test_summary[" + std::to_string(t) + "]";
      const auto& name = require(tests[t], "name", tt);
      const auto& passed = require(tests[t], "passed", tt);
      if (!name.is_string() || !passed.is_boolean()) {
        throw Error(ErrorCode::MalformedAttempt, tt + ": name/passed have wrong types");
      }
      a.test_summary.push_back({name.get<std::string>(), passed.get<bool>()});
    }
    b.attempts.push_back(std::move(a));
  }
  if (meta.contains("solved_at") && !meta.at("solved_at").is_null()) {
    if (!meta.at("solved_at").is_number_integer()) {
      throw Error(ErrorCode::MalformedAttempt, where + ".solved_at must be an integer");
    }
    b.solved_at = meta.at("solved_at").get<int>();
  } else {
    for (const auto& a : b.attempts) {
      if (a.reward >= 1.0) {
        b.solved_at = a.index;
        break;
      }
    }
  }
  if (meta.contains("evaluations")) {
    const auto& evals = meta.at("evaluations");
    if (!evals.is_array()) {
      throw Error(ErrorCode::MissingField, where + ".evaluations must be an array");
    }
    for (std::size_t i = 0; i < evals.size(); ++i) {
      const std::string at = where + " evaluations[" + std::to_string(i) + "]";
      EvaluationRecord e;
      e.task_id = b.task_id;
      e.model_id = require(evals[i], "model_id", at).get<std::string>();
      const auto cond = require(evals[i], "condition", at).get<std::string>();
      const auto parsed = parse_condition(cond);
      if (!parsed) {
        throw Error(ErrorCode::InvariantViolation, at + ".condition '" + cond + "' is unknown");
      }
      e.condition = *parsed;
      e.reward = read_real(require(evals[i], "reward", at), at + ".reward");
      b.evaluations.push_back(std::move(e));
    }
  }
  return b;
}

Memo load_memo_text(const std::string& text, const std::string& where) {
  try {
    return parse_memo(text, /*strict=*/true).value;
  } catch (const Error& e) {
    throw Error(ErrorCode::MemoParseFailure, where + ": " + e.what());
  }
}

std::vector<std::string> parse_commands_file(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    out.push_back(unescape_line(text.substr(start, nl - start)));
    start = nl + 1;
  }
  return out;
}

json parse_json(const std::string& text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MissingField, where + ": invalid JSON (" + e.what() + ")");
  }
}

TrajectoryBundle load_directory(const fs::path& dir) {
  const fs::path meta_path = dir / "bundle.json";
  if (!fs::exists(meta_path)) {
    throw Error(ErrorCode::MissingField, meta_path.string() + " does not exist");
  }
  const std::string where = meta_path.string();
  TrajectoryBundle b = bundle_from_metadata(parse_json(read_file(meta_path), where), where);

  for (auto& a : b.attempts) {
    const fs::path adir = dir / "attempts" / std::to_string(a.index);
    const fs::path stdout_path = adir / "stdout.txt";
    const fs::path commands_path = adir / "commands.txt";
    if (!fs::exists(stdout_path)) {
      throw Error(ErrorCode::MissingField, stdout_path.string() + " does not exist");
    }
    if (!fs::exists(commands_path)) {
      throw Error(ErrorCode::MissingField, commands_path.string() + " does not exist");
    }
    a.stdout_text = read_file(stdout_path);
    a.commands = parse_commands_file(read_file(commands_path));
  }

  const fs::path memo_dir = dir / "memos";
  std::size_t memo_files = 0;
  if (fs::is_directory(memo_dir)) {
    for (const auto& entry : fs::directory_iterator(memo_dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".md") ++memo_files;
    }
  }
  for (std::size_t i = 1; i <= memo_files; ++i) {
    const fs::path mp = memo_dir / ("memo_" + std::to_string(i) + ".md");
    if (!fs::exists(mp)) {
      throw Error(ErrorCode::InvariantViolation,
                  mp.string() + " is missing; memo files must be numbered 1..N");
    }
    b.memos.push_back(load_memo_text(read_file(mp), mp.string()));
  }

  const fs::path skill_path = dir / "skill" / "SKILL.md";
  if (fs::exists(skill_path)) {
    const std::string text = read_file(skill_path);
    if (!text.empty()) b.skill = parse_skill(text).value;
  }
  validate(b);
  return b;
}

TrajectoryBundle load_archive(const fs::path& file) {
  const std::string where = file.string();
  const json doc = parse_json(read_file(file), where);
  if (doc.contains("encoding") && doc.at("encoding") != kArchiveEncoding) {
    throw Error(ErrorCode::InvariantViolation, where + ": unsupported encoding");
  }
  TrajectoryBundle b = bundle_from_metadata(doc, where);
  const auto& attempts = doc.at("attempts");
  for (std::size_t i = 0; i < b.attempts.size(); ++i) {
    const std::string at = where + " attempts[" + std::to_string(i) + "]";
    b.attempts[i].stdout_text =
        unescape_bytes(require(attempts[i], "stdout", at).get<std::string>());
    const auto& cmds = require(attempts[i], "commands", at);
    if (!cmds.is_array()) {
      throw Error(ErrorCode::MalformedAttempt, at + ".commands must be an array");
    }
    for (const auto& c : cmds) b.attempts[i].commands.push_back(unescape_bytes(c.get<std::string>()));
  }
  if (doc.contains("memos")) {
    const auto& memos = doc.at("memos");
    for (std::size_t i = 0; i < memos.size(); ++i) {
      b.memos.push_back(load_memo_text(unescape_bytes(memos[i].get<std::string>()),
                                       where + " memos[" + std::to_string(i) + "]"));
    }
  }
  if (doc.contains("skill") && doc.at("skill").is_string()) {
    const std::string text = unescape_bytes(doc.at("skill").get<std::string>());
    if (!text.empty()) b.skill = parse_skill(text).value;
  }
  validate(b);
  return b;
}

}  // namespace

std::string format_decimal(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw Error(ErrorCode::Internal, "cannot format decimal");
  return std::string(buf.data(), ptr);
}

double parse_decimal(std::string_view text, const std::string& field) {
  double value = 0.0;
  const auto t = trim(text);
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) {
    throw Error(ErrorCode::MalformedAttempt,
                field + ": '" + std::string(text) + "' is not a decimal number");
  }
  return value;
}

std::string escape_line(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string unescape_line(std::string_view escaped) {
  std::string out;
  out.reserve(escaped.size());
  for (std::size_t i = 0; i < escaped.size(); ++i) {
    if (escaped[i] == '\\' && i + 1 < escaped.size()) {
      const char n = escaped[++i];
      if (n == 'n') out.push_back('\n');
      else if (n == 'r') out.push_back('\r');
      else out.push_back(n);
    } else {
      out.push_back(escaped[i]);
    }
  }
  return out;
}

std::string escape_bytes(std::string_view raw) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(raw.size());
  std::size_t i = 0;
  while (i < raw.size()) {
    if (raw[i] == '\\') {
      out += "\\\\";
      ++i;
      continue;
    }
    const std::size_t len = utf8_sequence_length(raw, i);
    if (len == 0) {
      const auto c = static_cast<unsigned char>(raw[i]);
      out += "\\x";
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xF]);
      ++i;
    } else {
      out.append(raw.substr(i, len));
      i += len;
    }
  }
  return out;
}

std::string unescape_bytes(std::string_view escaped) {
  std::string out;
  out.reserve(escaped.size());
  for (std::size_t i = 0; i < escaped.size(); ++i) {
    if (escaped[i] == '\\' && i + 1 < escaped.size()) {
      if (escaped[i + 1] == '\\') {
        out.push_back('\\');
        ++i;
        continue;
      }
      if (escaped[i + 1] == 'x' && i + 3 < escaped.size()) {
        const int hi = hex_value(escaped[i + 2]);
        const int lo = hex_value(escaped[i + 3]);
        if (hi >= 0 && lo >= 0) {
          out.push_back(static_cast<char>(hi * 16 + lo));
          i += 3;
          continue;
        }
      }
    }
    out.push_back(escaped[i]);
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + path.parent_path().string());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "short write to " + path.string());
}

TrajectoryBundle load_bundle(const fs::path& path) {
  std::error_code ec;
  if (fs::is_directory(path, ec)) return load_directory(path);
  if (fs::is_regular_file(path, ec)) return load_archive(path);
  throw Error(ErrorCode::IoFailure, path.string() + " is neither a bundle directory nor an archive");
}

void save_bundle(const TrajectoryBundle& bundle, const fs::path& path) {
  if (path.extension() == ".json") {
    json doc = bundle_metadata(bundle);
    doc["encoding"] = std::string(kArchiveEncoding);
    for (std::size_t i = 0; i < bundle.attempts.size(); ++i) {
      auto& ja = doc["attempts"][i];
      ja["stdout"] = escape_bytes(bundle.attempts[i].stdout_text);
      json cmds = json::array();
      for (const auto& c : bundle.attempts[i].commands) cmds.push_back(escape_bytes(c));
      ja["commands"] = std::move(cmds);
    }
    json memos = json::array();
    for (const auto& m : bundle.memos) memos.push_back(escape_bytes(m.raw_text));
    doc["memos"] = std::move(memos);
    if (bundle.skill) doc["skill"] = escape_bytes(bundle.skill->source_text());
    write_file(path, doc.dump(2) + "\n");
    return;
  }

  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + path.string());
  // Stale memo files would be picked up on reload.
  fs::remove_all(path / "memos", ec);
  fs::remove_all(path / "attempts", ec);
  fs::remove_all(path / "skill", ec);

  write_file(path / "bundle.json", bundle_metadata(bundle).dump(2) + "\n");
  for (const auto& a : bundle.attempts) {
    const fs::path adir = path / "attempts" / std::to_string(a.index);
    write_file(adir / "stdout.txt", a.stdout_text);
    std::string cmds;
    for (const auto& c : a.commands) {
      cmds += escape_line(c);
      cmds.push_back('\n');
    }
    write_file(adir / "commands.txt", cmds);
  }
  for (std::size_t i = 0; i < bundle.memos.size(); ++i) {
    write_file(path / "memos" / ("memo_" + std::to_string(i + 1) + ".md"),
               bundle.memos[i].raw_text);
  }
  if (bundle.skill && !bundle.skill->source_text().empty()) {
    write_file(path / "skill" / "SKILL.md", bundle.skill->source_text());
  }
}

}  // namespace pdi
