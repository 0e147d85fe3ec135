#pragma once

#include <string>
#include <vector>

namespace jrc {

// A rectangular table of pre-formatted cells.
class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

  // Throws InputError if the row width differs from the header.
  void add_row(std::vector<std::string> row);

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

  std::string to_csv() const;
  // Space-aligned columns, right-justified except the first.
  std::string to_text() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Fixed-precision formatting used by every emitted table ("NA" for NaN).
std::string format_fixed(double value, int precision = 6);

}  // namespace jrc
