#pragma once

#include <istream>
#include <string>
#include <vector>

namespace dynastep::cli {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  [[nodiscard]] std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
  [[nodiscard]] const std::vector<double>* column(const std::string& name) const;
};

/// Reads a numeric CSV with a header row. Throws ConfigError when malformed.
CsvTable read_csv(std::istream& in);

/// Line chart of `channels` against the first column (time).
/// Throws ConfigError for an empty table or an unknown channel.
std::string render_svg(const CsvTable& table, const std::vector<std::string>& channels,
                       const std::string& title = "");

}  // namespace dynastep::cli
