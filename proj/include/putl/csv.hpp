#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace putl {

// Numeric CSV with a header row. Lines starting with '#' and blank lines are
// skipped. Empty cells are kept as missing.
struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::optional<double>>> rows;
  std::vector<int> lines;  // source line of each row

  // -1 when absent.
  int column(std::string_view name) const;
  [[noreturn]] void fail(std::size_t row, const std::string& message) const;
};

CsvTable parse_csv(std::istream& in, std::string source);
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace putl
