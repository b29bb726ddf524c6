#include "bdsde/report.hpp"

#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace bdsde {

std::size_t ExperimentReport::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw std::out_of_range("report '" + kind + "' has no column '" + name + "'");
}

std::vector<Cell> ExperimentReport::column(const std::string& name) const {
  const std::size_t c = column_index(name);
  std::vector<Cell> out;
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

Cell ExperimentReport::cell(std::size_t row, const std::string& name) const { return rows.at(row)[column_index(name)]; }

std::string ExperimentReport::diagnostic(const std::string& key) const {
  for (const auto& [k, v] : diagnostics) {
    if (k == key) return v;
  }
  return {};
}

void ExperimentReport::add_row(std::vector<Cell> row, double se) {
  if (row.size() != columns.size()) throw std::logic_error("report row width differs from the header");
  rows.push_back(std::move(row));
  standard_errors.push_back(se);
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_cell(const Cell& c) { return c ? format_number(*c) : "undefined"; }

void write_csv(std::ostream& os, const std::vector<std::string>& columns, const std::vector<std::vector<Cell>>& rows) {
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << format_cell(r[i]);
    os << '\n';
  }
}

void write_csv(std::ostream& os, const ExperimentReport& report) { write_csv(os, report.columns, report.rows); }

}  // namespace bdsde
