#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "excite/grid.hpp"
#include "excite/ingest.hpp"

namespace excite {

enum class SeriesKind { count, price };

struct BucketSeries {
  BucketGrid grid;
  std::vector<double> values;  // one per bucket
  SeriesKind kind = SeriesKind::count;
};

struct ReturnSeries {
  BucketGrid grid;
  std::vector<double> returns;  // returns[i]: bucket i -> i + 1
};

struct EventStream {
  std::string label;
  std::vector<std::size_t> event_buckets;  // strictly increasing

  friend bool operator==(const EventStream&, const EventStream&) = default;
};

struct ProcessSet {
  BucketGrid grid;
  std::vector<EventStream> streams;  // unique labels

  // Unique labels, increasing in-range indices.
  void validate() const;
  std::optional<std::size_t> index_of(const std::string& label) const;
  std::size_t total_events() const noexcept;

  friend bool operator==(const ProcessSet&, const ProcessSet&) = default;
};

// Throws input_error naming the first timestamp outside the grid.
BucketSeries bucketize_counts(std::span<const std::int64_t> timestamps, const BucketGrid& grid);

// Last traded price per bucket, forward-filled across empty buckets. Ticks
// before the grid seed the first value; ticks after it are ignored. Throws
// input_error if no tick falls before the end of bucket 0.
BucketSeries bucketize_prices(std::span<const TickRecord> ticks, const BucketGrid& grid);

// ln(v[i+1]/v[i]) for prices; ln((v[i+1]+s)/(v[i]+s)) for counts.
ReturnSeries log_returns(const BucketSeries& series, double count_smoothing = 1.0);

enum class JumpDirection { up, down };

// Upper-tail cutoff such that exactly ceil((1 - percentile) * n) of n
// distinct values lie strictly above it: the order statistic of rank
// n - ceil((1 - percentile) * n), 1-based, clamped to [1, n].
double tail_threshold(std::span<const double> values, double percentile);

// Up: event at bucket i + 1 iff r[i] > threshold and r[i] > 0, with the
// threshold taken over all returns. Down: the same rule on negated returns.
// Requires at least 10 returns.
EventStream detect_jumps(const ReturnSeries& returns, double percentile, JumpDirection direction,
                         std::string label = {});

// Fraction of events that are the only event in their bucket across every
// stream. Throws input_error when there are no events.
double overlap_fraction(const ProcessSet& set);

// Event CSV: header `label,bucket_index,bucket_start_unix`, rows sorted by
// (label, bucket_index). The grid and the stream order (including streams
// with no events) are kept in a JSON sidecar next to it.
void write_event_csv(std::ostream& out, const ProcessSet& set);
void write_events(const std::filesystem::path& csv_path, const ProcessSet& set);
std::filesystem::path event_meta_path(const std::filesystem::path& csv_path);

// Reads the CSV and, when present, its sidecar. Without a sidecar, streams
// appear in order of first occurrence, the grid starts at the first
// row's bucket 0 and ends after the last event; the width defaults to 900 s
// unless it can be derived from two distinct rows.
ProcessSet read_events(const std::filesystem::path& csv_path);

}  // namespace excite
