#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace sarrain {

/// Minimal comma-separated table: no quoting, first line is the header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws FormatError if absent.
  std::size_t column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text, std::string_view origin = {});
CsvTable read_csv(const std::filesystem::path& path);

/// Throws FormatError unless every named column is present.
void expect_columns(const CsvTable& table, std::initializer_list<std::string_view> names,
                    std::string_view origin = {});

double parse_double(std::string_view field, std::string_view origin = {});
long long parse_int(std::string_view field, std::string_view origin = {});

}  // namespace sarrain
