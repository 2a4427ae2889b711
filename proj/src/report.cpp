#include "pdi/report.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <thread>

#include <json.hpp>

#include "pdi/bundle_io.hpp"
#include "pdi/errors.hpp"

namespace pdi {
namespace {

std::string cell_text(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_decimal(*d);
  if (const auto* s = std::get_if<std::string>(&c)) return csv_escape(*s);
  return {};
}

nlohmann::ordered_json cell_json(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) {
    if (!std::isfinite(*d)) return nullptr;
    // Round-trip through the shortest decimal so JSON and CSV agree.
    return nlohmann::ordered_json::parse(format_decimal(*d));
  }
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  return nullptr;
}

}  // namespace

Cell cell(std::optional<double> v) {
  if (!v) return std::monostate{};
  return *v;
}

std::string config_line(const ReportConfig& c) {
  return "# config: alpha=" + format_decimal(c.alpha) + " tokenizer=" + c.tokenizer +
         " tie_policy=" + c.tie_policy +
         " spearman_exact_max_n=" + std::to_string(c.spearman_exact_max_n);
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos &&
      (field.empty() || field.front() != '#')) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string render_csv(const std::vector<Table>& tables, const ReportConfig& config) {
  std::string out = config_line(config) + "\n";
  for (const auto& t : tables) {
    if (tables.size() > 1) out += "# table: " + t.name + "\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
      out += (i ? "," : "") + csv_escape(t.columns[i]);
    }
    out += "\n";
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + cell_text(row[i]);
      out += "\n";
    }
    for (const auto& n : t.notes) out += "# " + n + "\n";
  }
  return out;
}

std::string render_json(const std::vector<Table>& tables, const ReportConfig& config) {
  nlohmann::ordered_json doc;
  doc["config"] = {{"alpha", cell_json(config.alpha)},
                   {"tokenizer", config.tokenizer},
                   {"tie_policy", config.tie_policy},
                   {"spearman_exact_max_n", config.spearman_exact_max_n}};
  auto& jt = doc["tables"] = nlohmann::ordered_json::array();
  for (const auto& t : tables) {
    nlohmann::ordered_json j;
    j["name"] = t.name;
    j["columns"] = t.columns;
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& row : t.rows) {
      nlohmann::ordered_json r;
      for (std::size_t i = 0; i < row.size() && i < t.columns.size(); ++i) {
        r[t.columns[i]] = cell_json(row[i]);
      }
      j["rows"].push_back(std::move(r));
    }
    j["notes"] = t.notes;
    jt.push_back(std::move(j));
  }
  return doc.dump(2) + "\n";
}

std::optional<std::size_t> CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

CsvTable parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '#') {
      const auto nl = text.find('\n', i);
      i = nl == std::string_view::npos ? text.size() : nl + 1;
      continue;
    }
    if (text[i] == '\n' || text[i] == '\r') {
      ++i;
      continue;
    }
    std::vector<std::string> rec;
    std::string field;
    bool done = false;
    while (!done) {
      if (i < text.size() && text[i] == '"') {
        ++i;
        bool closed = false;
        while (i < text.size()) {
          if (text[i] == '"') {
            if (i + 1 < text.size() && text[i + 1] == '"') {
              field += '"';
              i += 2;
              continue;
            }
            ++i;
            closed = true;
            break;
          }
          field += text[i++];
        }
        if (!closed) throw Error(ErrorCode::InvalidArgument, "csv: unterminated quote");
      }
      while (i < text.size() && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
        field += text[i++];
      }
      rec.push_back(std::move(field));
      field.clear();
      if (i < text.size() && text[i] == ',') {
        ++i;
      } else {
        if (i < text.size() && text[i] == '\r') ++i;
        if (i < text.size() && text[i] == '\n') ++i;
        done = true;
      }
    }
    records.push_back(std::move(rec));
  }
  CsvTable t;
  if (records.empty()) throw Error(ErrorCode::EmptyInput, "csv: no header");
  t.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != t.header.size()) {
      throw Error(ErrorCode::InvalidArgument,
                  "csv: row " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                      " fields, expected " + std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(records[r]));
  }
  return t;
}

std::optional<double> parse_number(std::string_view text) {
  if (text.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace pdi
