#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace excite {

struct RawSubmission {
  std::string id;
  std::int64_t created_utc = 0;  // seconds since epoch, > 0
  std::string source;            // community label, non-empty
  std::string text;              // title and body joined by one space

  friend bool operator==(const RawSubmission&, const RawSubmission&) = default;
};

struct TickRecord {
  std::int64_t timestamp_ms = 0;
  double price = 0.0;  // > 0
  double amount = 0.0;

  friend bool operator==(const TickRecord&, const TickRecord&) = default;
};

struct ReadOptions {
  // Skip and count malformed records instead of failing on the first one.
  bool lenient = false;
};

template <class Record>
struct ReadResult {
  std::vector<Record> records;
  std::size_t skipped = 0;
  std::vector<std::string> diagnostics;  // one "path:line: reason" per skip
};

// JSON Lines with keys id, created_utc, subreddit, title and optional
// selftext. Blank lines are ignored. Output is stably sorted by created_utc.
ReadResult<RawSubmission> read_submissions(const std::filesystem::path& path,
                                           ReadOptions options = {});

// Headerless CSV `timestamp_ms,price,amount`. Output is stably sorted by
// timestamp.
ReadResult<TickRecord> read_ticks(const std::filesystem::path& path, ReadOptions options = {});

// Fixture writers; the text goes into `title` with no `selftext`.
void write_submissions(const std::filesystem::path& path, std::span<const RawSubmission> records);
void write_ticks(const std::filesystem::path& path, std::span<const TickRecord> records);

}  // namespace excite
