#pragma once

#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "shapereg/models.hpp"

namespace shapereg {

/// Header row plus numeric columns. Blank lines and lines starting with '#'
/// are skipped.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  /// Index of `name` in the header; throws InvalidInput when absent.
  std::size_t column(const std::string& name) const;
  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

struct ColumnNames {
  std::string x = "x";
  std::string y = "y";
  std::optional<std::string> weights;
  std::optional<std::string> group;
};

/// Pulls a Dataset out of a table; group values must be 0 or 1.
Dataset dataset_from_csv(const CsvTable& table, const ColumnNames& names);

}  // namespace shapereg
