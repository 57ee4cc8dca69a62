#include "talkpulse/table.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "talkpulse/errors.hpp"

namespace talkpulse {

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string cell_text(const Cell& cell) {
  struct Visitor {
    std::string operator()(std::monostate) const { return {}; }
    std::string operator()(const std::string& s) const { return csv_escape(s); }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(double v) const { return format_real(v); }
  };
  return std::visit(Visitor{}, cell);
}

}  // namespace

std::string format_real(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

void Table::add(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw std::logic_error("table row width mismatch");
  rows.push_back(std::move(row));
}

void Table::write_csv(std::ostream& out) const {
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << csv_escape(columns[i]);
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << cell_text(row[i]);
    out << '\n';
  }
}

void Table::write_json(std::ostream& out) const {
  out << "[";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < columns.size(); ++i) {
      const Cell& cell = rows[r][i];
      if (std::holds_alternative<std::monostate>(cell)) {
        obj[columns[i]] = nullptr;
      } else if (auto s = std::get_if<std::string>(&cell)) {
        obj[columns[i]] = *s;
      } else if (auto v = std::get_if<std::int64_t>(&cell)) {
        obj[columns[i]] = *v;
      } else {
        const double d = std::get<double>(cell);
        obj[columns[i]] = std::isfinite(d) ? nlohmann::ordered_json(d)
                                           : nlohmann::ordered_json(format_real(d));
      }
    }
    out << (r ? ",\n " : "\n ") << obj.dump();
  }
  out << (rows.empty() ? "]\n" : "\n]\n");
}

std::filesystem::path write_table(const Table& table, const std::filesystem::path& dir,
                                  const std::string& stem, OutputFormat format) {
  auto path = dir / (stem + (format == OutputFormat::csv ? ".csv" : ".json"));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  if (format == OutputFormat::csv) {
    table.write_csv(out);
  } else {
    table.write_json(out);
  }
  if (!out) throw ConfigError("write failed for " + path.string());
  return path;
}

}  // namespace talkpulse
