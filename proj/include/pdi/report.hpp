#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pdi {

// Empty cell, number, or text.
using Cell = std::variant<std::monostate, double, std::string>;

Cell cell(std::optional<double> v);

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<std::string> notes;  // trailing summary lines
};

// Provenance written ahead of every report.
struct ReportConfig {
  double alpha = 0.002;
  std::string tokenizer = "word-v1";
  std::string tie_policy = "median-low";
  std::size_t spearman_exact_max_n = 12;
};

std::string config_line(const ReportConfig& config);

// CSV: "# config: ..." line, header, rows, then "# note" lines. Several
// tables are separated by "# table: <name>" lines.
std::string render_csv(const std::vector<Table>& tables, const ReportConfig& config);
std::string render_json(const std::vector<Table>& tables, const ReportConfig& config);

std::string csv_escape(std::string_view field);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index, or nullopt.
  std::optional<std::size_t> column(std::string_view name) const;
};

// RFC 4180 quoting; lines starting with '#' outside quotes are skipped.
// Throws InvalidArgument on ragged rows or unterminated quotes.
CsvTable parse_csv(std::string_view text);

std::optional<double> parse_number(std::string_view text);

// Runs fn(i) for i in [0, n) on up to `threads` workers. Results are
// written by index, so output order never depends on scheduling. The first
// exception (lowest index) is rethrown after all workers finish.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace pdi
