#include "larvaecast/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <system_error>

#include "larvaecast/error.hpp"

namespace larvaecast::csv {

Table::Table(std::string source, std::vector<std::string> header, std::vector<Row> rows)
    : source_(std::move(source)), header_(std::move(header)), rows_(std::move(rows)) {}

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i)
    if (header_[i] == name) return i;
  throw ParseError(source_ + ": missing column '" + std::string(name) + "'");
}

void Table::require_columns(std::initializer_list<std::string_view> names) const {
  for (auto name : names) (void)column(name);
}

std::string Table::where(const Row& row, std::size_t column) const {
  return source_ + ":" + std::to_string(row.line) + " column '" +
         (column < header_.size() ? header_[column] : std::to_string(column)) + "'";
}

const std::string& Table::field(const Row& row, std::size_t column) const {
  if (column >= row.fields.size()) throw ParseError(where(row, column) + ": missing field");
  return row.fields[column];
}

double Table::number(const Row& row, std::size_t column) const {
  const auto& text = field(row, column);
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end || !std::isfinite(value))
    throw ParseError(where(row, column) + ": not a number: '" + text + "'");
  return value;
}

long long Table::integer(const Row& row, std::size_t column) const {
  const auto& text = field(row, column);
  long long value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end)
    throw ParseError(where(row, column) + ": not an integer: '" + text + "'");
  return value;
}

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

Table parse(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  bool have_header = false;
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line.empty()) continue;
    auto fields = split_line(line);
    if (!have_header) {
      header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != header.size())
      throw ParseError(source + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                       " fields, found " + std::to_string(fields.size()));
    rows.push_back(Row{line_no, std::move(fields)});
  }
  if (!have_header) throw ParseError(source + ": missing header row");
  return Table(source, std::move(header), std::move(rows));
}

Table read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return parse(in, path.string());
}

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw InvariantError("format_number: conversion failed");
  return std::string(buf, ptr);
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

void write_file(const std::filesystem::path& path, const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  auto write_row = [&out](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out << ',';
      out << escape(fields[i]);
    }
    out << '\n';
  };
  write_row(header);
  for (const auto& row : rows) write_row(row);
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace larvaecast::csv
