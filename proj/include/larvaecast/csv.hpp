#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace larvaecast::csv {

struct Row {
  std::size_t line = 0;  // 1-based line number in the source
  std::vector<std::string> fields;
};

/// A parsed CSV document with a mandatory header row.
class Table {
public:
  Table(std::string source, std::vector<std::string> header, std::vector<Row> rows);

  const std::string& source() const { return source_; }
  const std::vector<std::string>& header() const { return header_; }
  const std::vector<Row>& rows() const { return rows_; }

  /// Column index; throws ParseError naming the missing column.
  std::size_t column(std::string_view name) const;

  /// Throws ParseError unless every named column exists.
  void require_columns(std::initializer_list<std::string_view> names) const;

  const std::string& field(const Row& row, std::size_t column) const;
  double number(const Row& row, std::size_t column) const;
  long long integer(const Row& row, std::size_t column) const;

  /// "<source>:<line> column '<name>'" for error messages.
  std::string where(const Row& row, std::size_t column) const;

private:
  std::string source_;
  std::vector<std::string> header_;
  std::vector<Row> rows_;
};

/// Splits one line. Fields may be double-quoted; "" escapes a quote.
std::vector<std::string> split_line(std::string_view line);

Table parse(std::istream& in, const std::string& source);
Table read_file(const std::filesystem::path& path);

/// Shortest decimal form that round-trips to the same double.
std::string format_number(double value);

/// Quotes a field if it contains a comma, quote or newline.
std::string escape(std::string_view field);

/// Writes rows to `path` atomically enough for a CLI: truncate, write, check.
void write_file(const std::filesystem::path& path, const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows);

}  // namespace larvaecast::csv
