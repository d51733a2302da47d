#include "sarrain/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "sarrain/error.hpp"

namespace sarrain {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.emplace_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw FormatError("CSV is missing column '" + std::string(name) + "'");
}

CsvTable parse_csv(std::string_view text, std::string_view origin) {
  CsvTable table;
  std::istringstream in{std::string(text)};
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    const auto view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    auto fields = split_line(view);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw FormatError("CSV row has " + std::to_string(fields.size()) +
                            " fields, header has " + std::to_string(table.header.size()),
                        std::string(origin));
    }
    table.rows.push_back(std::move(fields));
  }
  if (!have_header) throw FormatError("CSV has no header", std::string(origin));
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open CSV", path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), path.string());
}

void expect_columns(const CsvTable& table, std::initializer_list<std::string_view> names,
                    std::string_view origin) {
  for (auto name : names) {
    bool found = false;
    for (const auto& h : table.header) found = found || h == name;
    if (!found) {
      throw FormatError("CSV is missing column '" + std::string(name) + "'",
                        std::string(origin));
    }
  }
}

double parse_double(std::string_view field, std::string_view origin) {
  try {
    std::size_t used = 0;
    const std::string s(trim(field));
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw FormatError("not a number: '" + std::string(field) + "'", std::string(origin));
}

long long parse_int(std::string_view field, std::string_view origin) {
  const auto s = trim(field);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw FormatError("not an integer: '" + std::string(field) + "'", std::string(origin));
  }
  return v;
}

}  // namespace sarrain
