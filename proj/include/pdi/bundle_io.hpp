#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "pdi/trajectory.hpp"

namespace pdi {

// Two on-disk forms are accepted:
//   <dir>/bundle.json + memos/memo_<i>.md + skill/SKILL.md +
//        attempts/<i>/stdout.txt + attempts/<i>/commands.txt
//   <file>.json  single-file archive with all text inlined (byte-escaped)
TrajectoryBundle load_bundle(const std::filesystem::path& path);

// Writes the directory form, or the archive form when path ends in ".json".
// The target directory is created if needed; existing bundle files are
// overwritten.
void save_bundle(const TrajectoryBundle& bundle, const std::filesystem::path& path);

// Reward and other reals are stored as shortest round-trip decimal strings.
std::string format_decimal(double value);
double parse_decimal(std::string_view text, const std::string& field);

// Lossless text escaping used where a container cannot hold raw bytes.
// escape_line: backslash, \n and \r become two-character escapes.
std::string escape_line(std::string_view raw);
std::string unescape_line(std::string_view escaped);
// escape_bytes: backslash is doubled and bytes that are not part of a valid
// UTF-8 sequence become \xHH, so the result is always valid UTF-8.
std::string escape_bytes(std::string_view raw);
std::string unescape_bytes(std::string_view escaped);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace pdi
