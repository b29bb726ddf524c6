#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace bdsde {

using Cell = std::optional<double>;  // nullopt prints as "undefined"

struct ExperimentReport {
  std::string kind;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<double> standard_errors;  // one per row
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::pair<std::string, std::string>> diagnostics;

  std::size_t column_index(const std::string& name) const;
  std::vector<Cell> column(const std::string& name) const;
  Cell cell(std::size_t row, const std::string& name) const;
  /// Empty string when the key is absent.
  std::string diagnostic(const std::string& key) const;
  void add_row(std::vector<Cell> row, double se = 0.0);
};

/// 17 significant digits, round-trip exact for doubles.
std::string format_number(double v);
std::string format_cell(const Cell& c);

/// Header row, then one line per row.
void write_csv(std::ostream& os, const std::vector<std::string>& columns, const std::vector<std::vector<Cell>>& rows);
void write_csv(std::ostream& os, const ExperimentReport& report);

}  // namespace bdsde
