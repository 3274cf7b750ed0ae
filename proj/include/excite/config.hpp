#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace excite::config {

// The TOML subset used by pipeline configs: [dotted.section] headers,
// `key = value` pairs, '#' comments, and values that are basic or literal
// strings, integers, floats, booleans or (possibly multi-line) arrays of
// those.
struct Value {
  using Array = std::vector<Value>;
  std::variant<bool, std::int64_t, double, std::string, Array> data;
};

struct Entry {
  std::string key;
  Value value;
  std::size_t line = 0;
};

struct Section {
  std::string name;  // "" for keys before the first header
  std::vector<Entry> entries;
  std::size_t line = 0;
};

class Document {
 public:
  // Throws config_error with `origin:line` on syntax errors, duplicate keys
  // or duplicate sections.
  static Document parse(std::string_view text, const std::string& origin = "<config>");
  static Document load(const std::filesystem::path& path);

  const std::vector<Section>& sections() const noexcept { return sections_; }
  const Section* find(std::string_view name) const;
  const std::string& origin() const noexcept { return origin_; }

 private:
  std::vector<Section> sections_;
  std::string origin_;
};

// Typed access to one section. finish() rejects keys nobody asked for, so
// typos surface as config errors.
class SectionReader {
 public:
  SectionReader(const Section* section, std::string origin);

  std::optional<std::string> string(const std::string& key);
  std::optional<std::int64_t> integer(const std::string& key);
  std::optional<std::uint64_t> unsigned_integer(const std::string& key);
  std::optional<double> number(const std::string& key);  // integers accepted
  std::optional<bool> boolean(const std::string& key);
  std::optional<std::vector<std::int64_t>> integers(const std::string& key);
  std::optional<std::vector<double>> numbers(const std::string& key);
  std::optional<std::vector<std::string>> strings(const std::string& key);

  void finish() const;

 private:
  const Entry* take(const std::string& key);
  [[noreturn]] void type_error(const Entry& entry, const char* expected) const;

  const Section* section_;
  std::string origin_;
  std::set<std::string> used_;
};

}  // namespace excite::config
