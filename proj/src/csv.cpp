#include "shapereg/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace shapereg {

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  s = s.substr(first, last - first + 1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::size_t line) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end) {
    throw InvalidInput("line " + std::to_string(line) + ": '" + s + "' is not a number");
  }
  return v;
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == name) return j;
  }
  throw InvalidInput("missing column '" + name + "'");
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    auto fields = split(line);
    if (!have_header) {
      table.header = std::move(fields);
      table.columns.resize(table.header.size());
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw InvalidInput("line " + std::to_string(lineno) + ": expected " +
                         std::to_string(table.header.size()) + " fields, found " +
                         std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < fields.size(); ++j) {
      table.columns[j].push_back(parse_number(fields[j], lineno));
    }
  }
  if (!have_header) throw InvalidInput("CSV input is empty");
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  return read_csv(in);
}

Dataset dataset_from_csv(const CsvTable& table, const ColumnNames& names) {
  Dataset data;
  data.x = table.columns[table.column(names.x)];
  data.y = table.columns[table.column(names.y)];
  if (names.weights) data.weights = table.columns[table.column(*names.weights)];
  if (names.group) {
    for (double g : table.columns[table.column(*names.group)]) {
      if (g != 0.0 && g != 1.0) throw InvalidInput("group column must hold 0 or 1");
      data.group.push_back(static_cast<int>(g));
    }
  }
  if (data.x.empty()) throw InvalidInput("CSV input has no data rows");
  return data;
}

}  // namespace shapereg
