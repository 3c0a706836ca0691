#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace darkspec {

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double x);

/// Strict double parse of a whole field; throws std::invalid_argument.
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

/// Quotes a field if it contains a comma, quote or newline.
std::string csv_escape(std::string_view field);

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

std::vector<std::string> split_csv_line(std::string_view line);

/// A header-keyed CSV table.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws std::out_of_range if absent.
  std::size_t column(std::string_view name) const;
  std::optional<std::size_t> find_column(std::string_view name) const;
};

CsvTable read_csv(std::istream& in);

}  // namespace darkspec
