#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qkd {

// Scientific notation below 1e-3, shortest round-trip-ish general form
// otherwise; exact zeros stay "0".
std::string csv_number(double v);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void comment(std::string_view line) { comments_.emplace_back(line); }
  void comments(const std::vector<std::string>& lines);
  void row(std::vector<std::string> cells);
  std::string str() const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::string> comments_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace qkd
