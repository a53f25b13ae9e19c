#include "qkd/csv.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace qkd {

std::string csv_number(double v) {
  if (v == 0.0) return "0";
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::abs(v) < 1e-3) return fmt::format("{:.6e}", v);
  return fmt::format("{:.12g}", v);
}

void CsvTable::comments(const std::vector<std::string>& lines) {
  for (const auto& l : lines) comment(l);
}

void CsvTable::row(std::vector<std::string> cells) {
  if (cells.size() != columns_.size()) {
    throw std::logic_error(fmt::format("csv row has {} cells, expected {}", cells.size(), columns_.size()));
  }
  rows_.push_back(std::move(cells));
}

std::string CsvTable::str() const {
  std::string out;
  for (const auto& c : comments_) out += fmt::format("# {}\n", c);
  out += fmt::format("{}\n", fmt::join(columns_, ","));
  for (const auto& r : rows_) out += fmt::format("{}\n", fmt::join(r, ","));
  return out;
}

}  // namespace qkd
