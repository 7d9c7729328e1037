#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace heatcast::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column, if present (exact match after trimming).
  [[nodiscard]] std::optional<std::size_t> column(std::string_view name) const;
};

enum class Delimiter { Auto, Comma, Whitespace };

// RFC-4180 style reading for comma files (quoted fields may contain commas,
// doubled quotes and newlines). Whitespace mode splits on runs of blanks.
// Auto picks comma when the header line contains one.
Table parse(std::string_view text, Delimiter delimiter = Delimiter::Auto);

// Round-trippable decimal form ("%.17g"); NaN is written as "NA".
std::string format_double(double value);

// Shorter fixed-precision form for human-facing columns.
std::string format_fixed(double value, int digits);

// Parses a number; empty, "NA" and "NaN" give nullopt.
std::optional<double> parse_double(std::string_view text);

// Quotes a field when it contains a comma, quote or newline.
std::string escape(std::string_view field);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace heatcast::csv
