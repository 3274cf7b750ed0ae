#include "excite/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "excite/csv.hpp"
#include "excite/error.hpp"

namespace excite {
namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open " + path.string());
  return in;
}

bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

std::string located(const std::filesystem::path& path, std::size_t line_no, const std::string& why) {
  return path.string() + ":" + std::to_string(line_no) + ": " + why;
}

RawSubmission parse_submission(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error&) {
    throw input_error("invalid JSON");
  }
  if (!j.is_object()) throw input_error("record is not a JSON object");

  auto require_string = [&](const char* key) -> std::string {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) throw input_error(std::string("missing string key '") + key + "'");
    return it->get<std::string>();
  };

  RawSubmission s;
  s.id = require_string("id");
  auto ts = j.find("created_utc");
  if (ts == j.end() || !ts->is_number_integer()) throw input_error("missing integer key 'created_utc'");
  s.created_utc = ts->get<std::int64_t>();
  if (s.created_utc <= 0) throw input_error("created_utc must be positive");
  s.source = require_string("subreddit");
  if (s.source.empty()) throw input_error("empty subreddit");
  s.text = require_string("title");

  auto body = j.find("selftext");
  if (body != j.end() && !body->is_null()) {
    if (!body->is_string()) throw input_error("selftext is not a string");
    const auto text = body->get<std::string>();
    if (!text.empty()) {
      s.text += ' ';
      s.text += text;
    }
  }
  return s;
}

TickRecord parse_tick(std::string_view line) {
  const auto fields = csv::split(line);
  if (fields.size() != 3) throw input_error("expected 3 columns, got " + std::to_string(fields.size()));
  TickRecord t;
  t.timestamp_ms = csv::parse_int(fields[0]);
  t.price = csv::parse_double(fields[1]);
  t.amount = csv::parse_double(fields[2]);
  if (!(t.price > 0.0)) throw input_error("non-positive price");
  if (t.amount < 0.0) throw input_error("negative amount");
  return t;
}

template <class Record, class Parse>
ReadResult<Record> read_lines(const std::filesystem::path& path, ReadOptions options, Parse parse) {
  auto in = open_input(path);
  ReadResult<Record> result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    try {
      result.records.push_back(parse(line));
    } catch (const Error& e) {
      const auto message = located(path, line_no, e.what());
      if (!options.lenient) throw input_error(message);
      ++result.skipped;
      result.diagnostics.push_back(message);
    }
  }
  if (in.bad()) throw input_error("read failure on " + path.string());
  return result;
}

}  // namespace

ReadResult<RawSubmission> read_submissions(const std::filesystem::path& path, ReadOptions options) {
  auto result = read_lines<RawSubmission>(path, options, parse_submission);
  std::stable_sort(result.records.begin(), result.records.end(),
                   [](const auto& a, const auto& b) { return a.created_utc < b.created_utc; });
  return result;
}

ReadResult<TickRecord> read_ticks(const std::filesystem::path& path, ReadOptions options) {
  auto result = read_lines<TickRecord>(path, options, parse_tick);
  std::stable_sort(result.records.begin(), result.records.end(),
                   [](const auto& a, const auto& b) { return a.timestamp_ms < b.timestamp_ms; });
  return result;
}

void write_submissions(const std::filesystem::path& path, std::span<const RawSubmission> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot write " + path.string());
  for (const auto& r : records) {
    nlohmann::json j = {{"id", r.id}, {"created_utc", r.created_utc}, {"subreddit", r.source}, {"title", r.text}};
    out << j.dump() << '\n';
  }
}

void write_ticks(const std::filesystem::path& path, std::span<const TickRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot write " + path.string());
  for (const auto& t : records)
    out << t.timestamp_ms << ',' << csv::format_exact(t.price) << ',' << csv::format_exact(t.amount) << '\n';
}

}  // namespace excite
