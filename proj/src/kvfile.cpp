#include "putl/kvfile.hpp"

#include "putl/error.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
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

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.emplace_back(trim(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_double(std::string_view text, double& out) {
  const std::string s(trim(text));
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && errno != ERANGE;
}

}  // namespace

const KvEntry* KvSection::find(std::string_view key) const {
  for (const auto& e : entries) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

void KvDocument::fail(int line, const std::string& message) const {
  throw DataError(source + ":" + std::to_string(line) + ": " + message);
}

const KvEntry& KvDocument::require(const KvSection& section, std::string_view key) const {
  if (const KvEntry* e = section.find(key)) return *e;
  const std::string where = section.kind.empty() ? "global options" : "[" + section.kind + " " + section.name + "]";
  fail(section.line, "missing key '" + std::string(key) + "' in " + where);
}

std::string KvDocument::get_string(const KvSection& section, std::string_view key,
                                   std::string fallback) const {
  const KvEntry* e = section.find(key);
  return e ? e->value : std::move(fallback);
}

double KvDocument::get_double(const KvSection& section, std::string_view key, double fallback) const {
  const KvEntry* e = section.find(key);
  return e ? to_double(*e) : fallback;
}

long KvDocument::get_int(const KvSection& section, std::string_view key, long fallback) const {
  const KvEntry* e = section.find(key);
  return e ? to_int(*e) : fallback;
}

bool KvDocument::get_bool(const KvSection& section, std::string_view key, bool fallback) const {
  const KvEntry* e = section.find(key);
  return e ? to_bool(*e) : fallback;
}

double KvDocument::to_double(const KvEntry& entry) const {
  double v = 0.0;
  if (!parse_double(entry.value, v)) fail(entry.line, "'" + entry.key + "' is not a number: '" + entry.value + "'");
  return v;
}

long KvDocument::to_int(const KvEntry& entry) const {
  long v = 0;
  const auto* first = entry.value.data();
  const auto* last = first + entry.value.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    fail(entry.line, "'" + entry.key + "' is not an integer: '" + entry.value + "'");
  }
  return v;
}

bool KvDocument::to_bool(const KvEntry& entry) const {
  const std::string& v = entry.value;
  if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "off" || v == "0" || v == "no") return false;
  fail(entry.line, "'" + entry.key + "' is not a boolean: '" + v + "'");
}

std::vector<double> KvDocument::to_doubles(const KvEntry& entry) const {
  std::vector<double> out;
  for (const auto& item : split_list(entry.value)) {
    double v = 0.0;
    if (!parse_double(item, v)) fail(entry.line, "'" + entry.key + "' has a non-numeric item: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> KvDocument::to_strings(const KvEntry& entry) const {
  return split_list(entry.value);
}

KvDocument parse_kv(std::istream& in, std::string source) {
  KvDocument doc;
  doc.source = std::move(source);
  KvSection* current = &doc.global;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string_view text = trim(raw);
    if (text.empty() || text.front() == '#') continue;
    if (text.front() == '[') {
      if (text.back() != ']') doc.fail(line, "unterminated section header");
      const std::string_view inner = trim(text.substr(1, text.size() - 2));
      const auto space = inner.find_first_of(" \t");
      if (inner.empty() || space == std::string_view::npos) {
        doc.fail(line, "section header must read [kind name]");
      }
      KvSection s;
      s.kind = std::string(inner.substr(0, space));
      s.name = std::string(trim(inner.substr(space)));
      s.line = line;
      for (const auto& other : doc.sections) {
        if (other.kind == s.kind && other.name == s.name) {
          doc.fail(line, "duplicate section [" + s.kind + " " + s.name + "]");
        }
      }
      doc.sections.push_back(std::move(s));
      current = &doc.sections.back();
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) doc.fail(line, "expected 'key = value'");
    KvEntry e{std::string(trim(text.substr(0, eq))), std::string(trim(text.substr(eq + 1))), line};
    if (e.key.empty()) doc.fail(line, "empty key");
    if (current->find(e.key)) doc.fail(line, "duplicate key '" + e.key + "'");
    current->entries.push_back(std::move(e));
  }
  return doc;
}

KvDocument read_kv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string() + ": cannot open file");
  return parse_kv(in, path.string());
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string join_doubles(std::span<const double> values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += format_double(values[i]);
  }
  return out;
}

std::string join_strings(std::span<const std::string> values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += values[i];
  }
  return out;
}

void KvWriter::comment(std::string_view text) { out_ << "# " << text << '\n'; }
void KvWriter::put(std::string_view key, std::string_view value) { out_ << key << " = " << value << '\n'; }
void KvWriter::put(std::string_view key, double value) { put(key, std::string_view(format_double(value))); }
void KvWriter::put(std::string_view key, long value) { put(key, std::string_view(std::to_string(value))); }
void KvWriter::put(std::string_view key, bool value) { put(key, std::string_view(value ? "true" : "false")); }
void KvWriter::section(std::string_view kind, std::string_view name) {
  out_ << '\n' << '[' << kind << ' ' << name << "]\n";
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw DataError(path.string() + ": write failed");
}

}  // namespace putl
