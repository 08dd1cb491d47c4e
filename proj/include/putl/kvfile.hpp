#pragma once

// Plain-text key/value documents used for manifests, models and reports:
//
//   # comment
//   key = value
//   [kind name]
//   key = value
//
// Keys before the first section header are global. Every entry keeps its line
// number so validation errors can point at the offending line.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace putl {

struct KvEntry {
  std::string key;
  std::string value;
  int line = 0;
};

struct KvSection {
  std::string kind;
  std::string name;
  int line = 0;
  std::vector<KvEntry> entries;

  const KvEntry* find(std::string_view key) const;
};

struct KvDocument {
  std::string source;
  KvSection global;
  std::vector<KvSection> sections;

  // "source:line: message" as a DataError.
  [[noreturn]] void fail(int line, const std::string& message) const;
  const KvEntry& require(const KvSection& section, std::string_view key) const;
  std::string get_string(const KvSection& section, std::string_view key,
                         std::string fallback) const;
  double get_double(const KvSection& section, std::string_view key, double fallback) const;
  long get_int(const KvSection& section, std::string_view key, long fallback) const;
  bool get_bool(const KvSection& section, std::string_view key, bool fallback) const;
  double to_double(const KvEntry& entry) const;
  long to_int(const KvEntry& entry) const;
  bool to_bool(const KvEntry& entry) const;
  std::vector<double> to_doubles(const KvEntry& entry) const;
  std::vector<std::string> to_strings(const KvEntry& entry) const;
};

KvDocument parse_kv(std::istream& in, std::string source);
KvDocument read_kv_file(const std::filesystem::path& path);

// Round-trip decimal form (17 significant digits).
std::string format_double(double value);
std::string join_doubles(std::span<const double> values);
std::string join_strings(std::span<const std::string> values);

class KvWriter {
 public:
  void comment(std::string_view text);
  void put(std::string_view key, std::string_view value);
  void put(std::string_view key, double value);
  void put(std::string_view key, long value);
  void put(std::string_view key, bool value);
  void section(std::string_view kind, std::string_view name);
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

// 64-bit FNV-1a as 16 hex digits.
std::string fnv1a_hex(std::string_view text);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace putl
