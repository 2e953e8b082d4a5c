#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace sgw::csv {

/// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split(const std::string& line);

/// Quotes a field when it contains a comma, quote or newline.
std::string escape(const std::string& field);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  /// 1-based source line of each row.
  std::vector<std::size_t> lines;
};

/// Reads a CSV file with a header line. Blank lines are skipped; rows whose
/// field count differs from the header raise ParseError.
Table read(const std::filesystem::path& path);

double to_double(const std::string& field, std::size_t line);
long long to_int(const std::string& field, std::size_t line);

/// Shortest round-trippable text for a double ("%.17g").
std::string exact(double value);

}  // namespace sgw::csv
