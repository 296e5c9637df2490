#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ahmkit::csv {

using Row = std::vector<std::string>;

/// RFC-4180 table: a header row plus data rows.
struct Table {
  Row header;
  std::vector<Row> rows;

  /// Index of a header column; throws a parse error when absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
};

std::string quote(std::string_view field);
std::string format_row(const Row& row);
std::string format(const Table& table);

/// Parses quoted fields, doubled quotes, embedded newlines, CRLF or LF.
/// Every row must have the header's width.
Table parse(std::string_view text);

Table read(const std::string& path);
void write(const std::string& path, const Table& table);

}  // namespace ahmkit::csv
