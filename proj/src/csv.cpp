#include "putl/csv.hpp"

#include "putl/error.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <istream>

namespace putl {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) return cells;
    start = comma + 1;
  }
}

}  // namespace

int CsvTable::column(std::string_view name) const {
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == name) return static_cast<int>(j);
  }
  return -1;
}

void CsvTable::fail(std::size_t row, const std::string& message) const {
  const int line = row < lines.size() ? lines[row] : 0;
  throw DataError(source + ":" + std::to_string(line) + ": " + message);
}

CsvTable parse_csv(std::istream& in, std::string source) {
  CsvTable t;
  t.source = std::move(source);
  std::string raw;
  int line = 0;
  bool have_header = false;
  while (std::getline(in, raw)) {
    ++line;
    const std::string_view text = trim(raw);
    if (text.empty() || text.front() == '#') continue;
    auto cells = split(text);
    if (!have_header) {
      for (std::size_t j = 0; j < cells.size(); ++j) {
        if (cells[j].empty()) throw DataError(t.source + ":" + std::to_string(line) + ": empty column name");
        for (std::size_t k = 0; k < j; ++k) {
          if (cells[k] == cells[j]) {
            throw DataError(t.source + ":" + std::to_string(line) + ": duplicate column '" + cells[j] + "'");
          }
        }
      }
      t.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw DataError(t.source + ":" + std::to_string(line) + ": expected " +
                      std::to_string(t.header.size()) + " fields, found " + std::to_string(cells.size()));
    }
    std::vector<std::optional<double>> row;
    row.reserve(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (cells[j].empty()) {
        row.emplace_back();
        continue;
      }
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(cells[j].c_str(), &end);
      if (end != cells[j].c_str() + cells[j].size() || errno == ERANGE) {
        throw DataError(t.source + ":" + std::to_string(line) + ": column '" + t.header[j] +
                        "' is not numeric: '" + cells[j] + "'");
      }
      row.emplace_back(v);
    }
    t.rows.push_back(std::move(row));
    t.lines.push_back(line);
  }
  if (!have_header) throw DataError(t.source + ": missing header row");
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string() + ": cannot open file");
  return parse_csv(in, path.string());
}

}  // namespace putl
