#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace emodiff {

// Tab-separated table with a header row. Cells are kept as text; numeric
// access parses on demand. "NA" marks a missing value.
class TextTable {
 public:
  TextTable() = default;
  explicit TextTable(std::vector<std::string> columns);

  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t n_rows() const { return rows_.size(); }
  std::size_t n_cols() const { return columns_.size(); }

  bool has_column(std::string_view name) const;
  // Index of a named column; throws InvalidInput when absent.
  std::size_t column_index(std::string_view name) const;

  const std::string& cell(std::size_t row, std::size_t col) const;
  const std::string& cell(std::size_t row, std::string_view col) const;

  // Parses a cell as double; throws InvalidInput on malformed text and
  // returns nullopt for "NA" or empty cells.
  std::optional<double> numeric(std::size_t row, std::size_t col) const;
  std::optional<double> numeric(std::size_t row, std::string_view col) const;

  void add_row(std::vector<std::string> cells);

  static TextTable read_file(const std::filesystem::path& path);
  void write_file(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

// Formats with six significant digits, the precision used for derived
// result tables.
std::string format_sig6(double x);

// Shortest decimal form that parses back to the same double; used where
// files must round-trip bit for bit.
std::string format_exact(double x);

std::string format_int(std::int64_t x);

double parse_double(std::string_view text, std::string_view what);
std::int64_t parse_int(std::string_view text, std::string_view what);

std::vector<std::string> split(std::string_view line, char sep);
// Splits on runs of spaces and tabs, skipping leading/trailing blanks.
std::vector<std::string> split_ws(std::string_view line);

// Reads a whole file; throws InvalidInput when the file cannot be opened.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace emodiff
