#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace talkpulse {

/// An absent value renders as an empty CSV cell and a JSON null.
using Cell = std::variant<std::monostate, std::string, std::int64_t, double>;

/// Shortest round-trip decimal form.
std::string format_real(double value);

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);

  void write_csv(std::ostream& out) const;
  /// Array of objects, keys in column order, one row per line.
  void write_json(std::ostream& out) const;
};

enum class OutputFormat { csv, json };

/// Writes `<dir>/<stem>.csv` or `<dir>/<stem>.json`; returns the path.
std::filesystem::path write_table(const Table& table, const std::filesystem::path& dir,
                                  const std::string& stem, OutputFormat format);

}  // namespace talkpulse
