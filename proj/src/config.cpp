#include "excite/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "excite/error.hpp"

namespace excite::config {
namespace {

class ValueParser {
 public:
  ValueParser(std::string_view text, const std::string& where) : text_(text), where_(where) {}

  Value parse_all() {
    Value v = parse_value();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected trailing characters");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const { throw config_error(where_ + ": " + why); }

  void skip_space() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        ++pos_;
      } else if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  Value parse_value() {
    skip_space();
    if (pos_ >= text_.size()) fail("missing value");
    const char c = text_[pos_];
    if (c == '"') return {parse_basic_string()};
    if (c == '\'') return {parse_literal_string()};
    if (c == '[') return parse_array();
    return parse_scalar();
  }

  std::string parse_basic_string() {
    ++pos_;
    std::string out;
    while (pos_ < text_.size()) {
      const char c = text_[pos_++];
      if (c == '"') return out;
      if (c == '\n') break;
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      if (pos_ >= text_.size()) break;
      switch (text_[pos_++]) {
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'r': out.push_back('\r'); break;
        default: fail("unsupported escape sequence");
      }
    }
    fail("unterminated string");
  }

  std::string parse_literal_string() {
    ++pos_;
    const auto end = text_.find('\'', pos_);
    if (end == std::string_view::npos || text_.substr(pos_, end - pos_).find('\n') != std::string_view::npos)
      fail("unterminated string");
    std::string out(text_.substr(pos_, end - pos_));
    pos_ = end + 1;
    return out;
  }

  Value parse_array() {
    ++pos_;
    Value::Array items;
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == ']') {
      ++pos_;
      return {items};
    }
    while (true) {
      items.push_back(parse_value());
      skip_space();
      if (pos_ >= text_.size()) fail("unterminated array");
      if (text_[pos_] == ',') {
        ++pos_;
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == ']') {
          ++pos_;
          return {items};
        }
        continue;
      }
      if (text_[pos_] == ']') {
        ++pos_;
        return {items};
      }
      fail("expected ',' or ']' in array");
    }
  }

  Value parse_scalar() {
    const auto start = pos_;
    while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != ']' && text_[pos_] != '#' &&
           text_[pos_] != ' ' && text_[pos_] != '\t' && text_[pos_] != '\n' && text_[pos_] != '\r')
      ++pos_;
    std::string token(text_.substr(start, pos_ - start));
    if (token == "true") return {true};
    if (token == "false") return {false};
    std::string digits;
    for (char c : token)
      if (c != '_') digits.push_back(c);
    if (!digits.empty() && digits.front() == '+') digits.erase(0, 1);
    if (digits.empty()) fail("missing value");
    const char* first = digits.data();
    const char* last = digits.data() + digits.size();
    if (digits.find_first_of(".eE") == std::string::npos) {
      std::int64_t i = 0;
      auto [p, ec] = std::from_chars(first, last, i);
      if (ec == std::errc() && p == last) return {i};
    }
    double d = 0.0;
    auto [p, ec] = std::from_chars(first, last, d);
    if (ec == std::errc() && p == last && std::isfinite(d)) return {d};
    fail("cannot parse value '" + token + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::string where_;
};

// Bracket depth outside strings and comments, to join multi-line arrays.
int bracket_balance(std::string_view s) {
  int depth = 0;
  char quote = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (quote) {
      if (c == '\\' && quote == '"') {
        ++i;
      } else if (c == quote) {
        quote = 0;
      }
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '#') {
      while (i < s.size() && s[i] != '\n') ++i;
    } else if (c == '[') {
      ++depth;
    } else if (c == ']') {
      --depth;
    }
  }
  return depth;
}

std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return std::string(s.substr(a, b - a + 1));
}

bool valid_key(std::string_view key) {
  if (key.empty()) return false;
  for (char c : key)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
  return key.front() != '.' && key.back() != '.' && key.find("..") == std::string_view::npos;
}

std::string strip_comment(std::string_view line) {
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote) {
      if (c == '\\' && quote == '"') ++i;
      else if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '#') {
      return std::string(line.substr(0, i));
    }
  }
  return std::string(line);
}

}  // namespace

Document Document::parse(std::string_view text, const std::string& origin) {
  Document doc;
  doc.origin_ = origin;
  doc.sections_.push_back({"", {}, 0});

  std::vector<std::string> lines;
  {
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
  }

  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    const auto where = origin + ":" + std::to_string(line_no);
    const std::string line = trim(strip_comment(lines[i]));
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) throw config_error(where + ": malformed section header");
      const auto name = trim(std::string_view(line).substr(1, line.size() - 2));
      if (!valid_key(name)) throw config_error(where + ": invalid section name '" + name + "'");
      if (doc.find(name)) throw config_error(where + ": duplicate section [" + name + "]");
      doc.sections_.push_back({name, {}, line_no});
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) throw config_error(where + ": expected 'key = value'");
    const auto key = trim(std::string_view(line).substr(0, eq));
    if (!valid_key(key)) throw config_error(where + ": invalid key '" + key + "'");
    std::string value_text = lines[i].substr(lines[i].find('=') + 1);
    while (bracket_balance(value_text) > 0 && i + 1 < lines.size()) value_text += "\n" + lines[++i];

    auto& section = doc.sections_.back();
    for (const auto& e : section.entries)
      if (e.key == key) throw config_error(where + ": duplicate key '" + key + "'");
    section.entries.push_back({key, ValueParser(value_text, where).parse_all(), line_no});
  }
  return doc;
}

Document Document::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

const Section* Document::find(std::string_view name) const {
  for (const auto& s : sections_)
    if (s.name == name) return &s;
  return nullptr;
}

SectionReader::SectionReader(const Section* section, std::string origin)
    : section_(section), origin_(std::move(origin)) {}

const Entry* SectionReader::take(const std::string& key) {
  if (!section_) return nullptr;
  for (const auto& e : section_->entries) {
    if (e.key == key) {
      used_.insert(key);
      return &e;
    }
  }
  return nullptr;
}

void SectionReader::type_error(const Entry& entry, const char* expected) const {
  throw config_error(origin_ + ":" + std::to_string(entry.line) + ": '" + entry.key + "' must be " + expected);
}

std::optional<std::string> SectionReader::string(const std::string& key) {
  const Entry* e = take(key);
  if (!e) return std::nullopt;
  if (auto s = std::get_if<std::string>(&e->value.data)) return *s;
  type_error(*e, "a string");
}

std::optional<std::int64_t> SectionReader::integer(const std::string& key) {
  const Entry* e = take(key);
  if (!e) return std::nullopt;
  if (auto i = std::get_if<std::int64_t>(&e->value.data)) return *i;
  type_error(*e, "an integer");
}

std::optional<std::uint64_t> SectionReader::unsigned_integer(const std::string& key) {
  const Entry* e = take(key);
  if (!e) return std::nullopt;
  if (auto i = std::get_if<std::int64_t>(&e->value.data); i && *i >= 0) return static_cast<std::uint64_t>(*i);
  type_error(*e, "a nonnegative integer");
}

std::optional<double> SectionReader::number(const std::string& key) {
  const Entry* e = take(key);
  if (!e) return std::nullopt;
  if (auto d = std::get_if<double>(&e->value.data)) return *d;
  if (auto i = std::get_if<std::int64_t>(&e->value.data)) return static_cast<double>(*i);
  type_error(*e, "a number");
}

std::optional<bool> SectionReader::boolean(const std::string& key) {
  const Entry* e = take(key);
  if (!e) return std::nullopt;
  if (auto b = std::get_if<bool>(&e->value.data)) return *b;
  type_error(*e, "true or false");
}

std::optional<std::vector<std::int64_t>> SectionReader::integers(const std::string& key) {
  const Entry* e = take(key);
  if (!e) return std::nullopt;
  auto arr = std::get_if<Value::Array>(&e->value.data);
  if (!arr) type_error(*e, "an array of integers");
  std::vector<std::int64_t> out;
  for (const auto& v : *arr) {
    auto i = std::get_if<std::int64_t>(&v.data);
    if (!i) type_error(*e, "an array of integers");
    out.push_back(*i);
  }
  return out;
}

std::optional<std::vector<double>> SectionReader::numbers(const std::string& key) {
  const Entry* e = take(key);
  if (!e) return std::nullopt;
  auto arr = std::get_if<Value::Array>(&e->value.data);
  if (!arr) type_error(*e, "an array of numbers");
  std::vector<double> out;
  for (const auto& v : *arr) {
    if (auto d = std::get_if<double>(&v.data)) out.push_back(*d);
    else if (auto i = std::get_if<std::int64_t>(&v.data)) out.push_back(static_cast<double>(*i));
    else type_error(*e, "an array of numbers");
  }
  return out;
}

std::optional<std::vector<std::string>> SectionReader::strings(const std::string& key) {
  const Entry* e = take(key);
  if (!e) return std::nullopt;
  auto arr = std::get_if<Value::Array>(&e->value.data);
  if (!arr) type_error(*e, "an array of strings");
  std::vector<std::string> out;
  for (const auto& v : *arr) {
    auto s = std::get_if<std::string>(&v.data);
    if (!s) type_error(*e, "an array of strings");
    out.push_back(*s);
  }
  return out;
}

void SectionReader::finish() const {
  if (!section_) return;
  for (const auto& e : section_->entries) {
    if (!used_.contains(e.key)) {
      const auto where = section_->name.empty() ? std::string("top level") : "[" + section_->name + "]";
      throw config_error(origin_ + ":" + std::to_string(e.line) + ": unknown key '" + e.key + "' in " + where);
    }
  }
}

}  // namespace excite::config
