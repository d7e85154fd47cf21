#include "emodiff/text_table.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "emodiff/errors.hpp"

namespace emodiff {

TextTable::TextTable(std::vector<std::string> columns) : columns_(std::move(columns)) {
  if (columns_.empty()) throw InvalidInput("table needs at least one column");
}

bool TextTable::has_column(std::string_view name) const {
  return std::find(columns_.begin(), columns_.end(), name) != columns_.end();
}

std::size_t TextTable::column_index(std::string_view name) const {
  auto it = std::find(columns_.begin(), columns_.end(), name);
  if (it == columns_.end())
    throw InvalidInput("table has no column named '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - columns_.begin());
}

const std::string& TextTable::cell(std::size_t row, std::size_t col) const {
  return rows_.at(row).at(col);
}

const std::string& TextTable::cell(std::size_t row, std::string_view col) const {
  return rows_.at(row).at(column_index(col));
}

std::optional<double> TextTable::numeric(std::size_t row, std::size_t col) const {
  const std::string& s = cell(row, col);
  if (s.empty() || s == "NA") return std::nullopt;
  return parse_double(s, "table cell");
}

std::optional<double> TextTable::numeric(std::size_t row, std::string_view col) const {
  return numeric(row, column_index(col));
}

void TextTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != columns_.size())
    throw InvalidInput("row width " + std::to_string(cells.size()) +
                       " does not match header width " + std::to_string(columns_.size()));
  rows_.push_back(std::move(cells));
}

TextTable TextTable::read_file(const std::filesystem::path& path) {
  std::string content = read_text_file(path);
  std::istringstream in(content);
  std::string line;
  if (!std::getline(in, line))
    throw InvalidInput("table file is empty: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  TextTable t(split(line, '\t'));
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line, '\t');
    if (cells.size() != t.columns_.size())
      throw InvalidInput(path.string() + ":" + std::to_string(lineno) +
                         ": expected " + std::to_string(t.columns_.size()) +
                         " cells, got " + std::to_string(cells.size()));
    t.rows_.push_back(std::move(cells));
  }
  return t;
}

void TextTable::write_file(const std::filesystem::path& path) const {
  std::string out;
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    if (c) out += '\t';
    out += columns_[c];
  }
  out += '\n';
  for (const auto& row : rows_) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += '\t';
      out += row[c];
    }
    out += '\n';
  }
  write_text_file(path, out);
}

std::string format_sig6(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

std::string format_exact(double x) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string format_int(std::int64_t x) { return std::to_string(x); }

double parse_double(std::string_view text, std::string_view what) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last)
    throw InvalidInput("cannot parse " + std::string(what) + " as number: '" +
                       std::string(text) + "'");
  return value;
}

std::int64_t parse_int(std::string_view text, std::string_view what) {
  std::int64_t value = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last)
    throw InvalidInput("cannot parse " + std::string(what) + " as integer: '" +
                       std::string(text) + "'");
  return value;
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.emplace_back(line.substr(start, i - start));
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot write file: " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw InvalidInput("short write: " + path.string());
}

}  // namespace emodiff
