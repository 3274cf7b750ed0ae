#include "excite/events.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <unordered_set>

#include <json.hpp>

#include "excite/csv.hpp"
#include "excite/error.hpp"

namespace excite {

void BucketGrid::validate() const {
  if (width <= 0) throw config_error("bucket width must be positive");
  if (start % width != 0) throw config_error("grid start must be a multiple of the bucket width");
  if (n_buckets < 2) throw config_error("grid needs at least two buckets");
}

std::optional<std::size_t> BucketGrid::bucket_of(std::int64_t t) const noexcept {
  if (!contains(t)) return std::nullopt;
  return static_cast<std::size_t>((t - start) / width);
}

BucketGrid BucketGrid::covering(std::int64_t first, std::int64_t last, std::int64_t width) {
  if (width <= 0) throw config_error("bucket width must be positive");
  if (last < first) throw input_error("grid range is empty");
  auto floor_div = [](std::int64_t a, std::int64_t b) { return a >= 0 ? a / b : -((-a + b - 1) / b); };
  BucketGrid grid;
  grid.width = width;
  grid.start = floor_div(first, width) * width;
  grid.n_buckets = std::max<std::size_t>(2, static_cast<std::size_t>(floor_div(last - grid.start, width) + 1));
  return grid;
}

void ProcessSet::validate() const {
  grid.validate();
  std::unordered_set<std::string> labels;
  for (const auto& s : streams) {
    if (!labels.insert(s.label).second) throw input_error("duplicate process label '" + s.label + "'");
    for (std::size_t i = 0; i < s.event_buckets.size(); ++i) {
      if (s.event_buckets[i] >= grid.n_buckets)
        throw input_error("event outside grid on process '" + s.label + "'");
      if (i > 0 && s.event_buckets[i] <= s.event_buckets[i - 1])
        throw input_error("events not strictly increasing on process '" + s.label + "'");
    }
  }
}

std::optional<std::size_t> ProcessSet::index_of(const std::string& label) const {
  for (std::size_t i = 0; i < streams.size(); ++i)
    if (streams[i].label == label) return i;
  return std::nullopt;
}

std::size_t ProcessSet::total_events() const noexcept {
  std::size_t n = 0;
  for (const auto& s : streams) n += s.event_buckets.size();
  return n;
}

BucketSeries bucketize_counts(std::span<const std::int64_t> timestamps, const BucketGrid& grid) {
  grid.validate();
  BucketSeries series{grid, std::vector<double>(grid.n_buckets, 0.0), SeriesKind::count};
  for (auto t : timestamps) {
    auto b = grid.bucket_of(t);
    if (!b) throw input_error("timestamp " + std::to_string(t) + " lies outside the bucket grid");
    series.values[*b] += 1.0;
  }
  return series;
}

BucketSeries bucketize_prices(std::span<const TickRecord> ticks, const BucketGrid& grid) {
  grid.validate();
  const std::int64_t width_ms = grid.width * 1000;
  const std::int64_t start_ms = grid.start * 1000;

  std::vector<std::optional<std::pair<std::int64_t, double>>> last(grid.n_buckets);
  std::optional<std::pair<std::int64_t, double>> before;
  for (const auto& t : ticks) {
    if (!(t.price > 0.0)) throw input_error("non-positive price at " + std::to_string(t.timestamp_ms));
    if (t.timestamp_ms < start_ms) {
      if (!before || t.timestamp_ms >= before->first) before = {{t.timestamp_ms, t.price}};
      continue;
    }
    const auto b = static_cast<std::size_t>((t.timestamp_ms - start_ms) / width_ms);
    if (b >= grid.n_buckets) continue;
    // Later ticks win; equal timestamps keep input order.
    if (!last[b] || t.timestamp_ms >= last[b]->first) last[b] = {{t.timestamp_ms, t.price}};
  }

  BucketSeries series{grid, std::vector<double>(grid.n_buckets), SeriesKind::price};
  std::optional<double> carry;
  if (before) carry = before->second;
  for (std::size_t b = 0; b < grid.n_buckets; ++b) {
    if (last[b]) carry = last[b]->second;
    if (!carry) throw input_error("no tick at or before the end of the first bucket");
    series.values[b] = *carry;
  }
  return series;
}

ReturnSeries log_returns(const BucketSeries& series, double count_smoothing) {
  if (series.values.size() < 2) throw input_error("need at least two buckets for returns");
  if (count_smoothing < 0.0) throw config_error("count smoothing must be nonnegative");
  const double s = series.kind == SeriesKind::count ? count_smoothing : 0.0;
  ReturnSeries out{series.grid, std::vector<double>(series.values.size() - 1)};
  for (std::size_t i = 0; i + 1 < series.values.size(); ++i) {
    const double a = series.values[i] + s;
    const double b = series.values[i + 1] + s;
    if (a == b) {
      out.returns[i] = 0.0;
      continue;
    }
    if (!(a > 0.0) || !(b > 0.0)) {
      if (series.kind == SeriesKind::price) throw input_error("non-positive price in series");
      throw numeric_error("zero count level with zero smoothing");
    }
    out.returns[i] = std::log(b / a);
  }
  return out;
}

double tail_threshold(std::span<const double> values, double percentile) {
  if (values.empty()) throw input_error("percentile of an empty sample");
  if (!(percentile > 0.0) || percentile > 1.0) throw config_error("percentile must be in (0, 1]");
  const auto n = values.size();
  const double tail = (1.0 - percentile) * static_cast<double>(n);
  // Guard against 1 - 0.99 not being exactly 0.01.
  const auto k_tail = static_cast<std::size_t>(std::max(0.0, std::ceil(tail - 1e-9 * std::max(1.0, tail))));
  const std::size_t rank = std::clamp<std::size_t>(n > k_tail ? n - k_tail : 1, 1, n);
  std::vector<double> sorted(values.begin(), values.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1), sorted.end());
  return sorted[rank - 1];
}

EventStream detect_jumps(const ReturnSeries& returns, double percentile, JumpDirection direction,
                         std::string label) {
  if (returns.returns.size() < 10) throw input_error("jump detection needs at least 10 returns");
  std::vector<double> oriented(returns.returns);
  if (direction == JumpDirection::down)
    for (auto& r : oriented) r = -r;
  const double threshold = tail_threshold(oriented, percentile);
  EventStream stream{std::move(label), {}};
  for (std::size_t i = 0; i < oriented.size(); ++i)
    if (oriented[i] > threshold && oriented[i] > 0.0) stream.event_buckets.push_back(i + 1);
  return stream;
}

double overlap_fraction(const ProcessSet& set) {
  std::map<std::size_t, std::size_t> occupancy;
  std::size_t total = 0;
  for (const auto& s : set.streams) {
    for (auto b : s.event_buckets) ++occupancy[b];
    total += s.event_buckets.size();
  }
  if (total == 0) throw input_error("overlap fraction of an empty process set");
  std::size_t sole = 0;
  for (const auto& [bucket, n] : occupancy)
    if (n == 1) ++sole;
  return static_cast<double>(sole) / static_cast<double>(total);
}

void write_event_csv(std::ostream& out, const ProcessSet& set) {
  std::vector<std::size_t> order(set.streams.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return set.streams[a].label < set.streams[b].label; });
  out << "label,bucket_index,bucket_start_unix\n";
  for (auto i : order) {
    const auto& s = set.streams[i];
    const auto label = csv::quote(s.label);
    for (auto b : s.event_buckets) out << label << ',' << b << ',' << set.grid.bucket_start(b) << '\n';
  }
}

std::filesystem::path event_meta_path(const std::filesystem::path& csv_path) {
  auto meta = csv_path;
  meta.replace_extension(".meta.json");
  return meta;
}

void write_events(const std::filesystem::path& csv_path, const ProcessSet& set) {
  set.validate();
  {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw input_error("cannot write " + csv_path.string());
    write_event_csv(out, set);
  }
  nlohmann::ordered_json meta;
  meta["grid_start"] = set.grid.start;
  meta["bucket_width"] = set.grid.width;
  meta["n_buckets"] = set.grid.n_buckets;
  meta["labels"] = nlohmann::ordered_json::array();
  for (const auto& s : set.streams) meta["labels"].push_back(s.label);
  std::ofstream out(event_meta_path(csv_path), std::ios::binary);
  if (!out) throw input_error("cannot write " + event_meta_path(csv_path).string());
  out << meta.dump(2) << '\n';
}

ProcessSet read_events(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw input_error("cannot open " + csv_path.string());

  struct Row {
    std::string label;
    std::size_t bucket;
    std::int64_t start;
  };
  std::vector<Row> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line != "label,bucket_index,bucket_start_unix")
        throw input_error(csv_path.string() + ":1: unexpected event CSV header");
      continue;
    }
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto f = csv::split(line);
      if (f.size() != 3) throw input_error("expected 3 columns");
      const auto bucket = csv::parse_int(f[1]);
      if (bucket < 0) throw input_error("negative bucket index");
      rows.push_back({f[0], static_cast<std::size_t>(bucket), csv::parse_int(f[2])});
    } catch (const Error& e) {
      throw input_error(csv_path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }

  ProcessSet set;
  const auto meta_path = event_meta_path(csv_path);
  if (std::filesystem::exists(meta_path)) {
    std::ifstream meta_in(meta_path, std::ios::binary);
    nlohmann::json meta;
    try {
      meta = nlohmann::json::parse(meta_in);
      set.grid.start = meta.at("grid_start").get<std::int64_t>();
      set.grid.width = meta.at("bucket_width").get<std::int64_t>();
      set.grid.n_buckets = meta.at("n_buckets").get<std::size_t>();
      for (const auto& l : meta.at("labels")) set.streams.push_back({l.get<std::string>(), {}});
    } catch (const nlohmann::json::exception& e) {
      throw input_error(meta_path.string() + ": " + e.what());
    }
  } else {
    if (rows.empty()) throw input_error(csv_path.string() + ": no events and no grid sidecar");
    std::int64_t width = kDefaultBucketWidth;
    for (const auto& r : rows) {
      if (r.bucket != rows.front().bucket) {
        const auto di = static_cast<std::int64_t>(r.bucket) - static_cast<std::int64_t>(rows.front().bucket);
        width = (r.start - rows.front().start) / di;
        break;
      }
    }
    std::size_t max_bucket = 0;
    for (const auto& r : rows) {
      max_bucket = std::max(max_bucket, r.bucket);
      if (!set.index_of(r.label)) set.streams.push_back({r.label, {}});
    }
    set.grid.width = width;
    set.grid.start = rows.front().start - static_cast<std::int64_t>(rows.front().bucket) * width;
    set.grid.n_buckets = std::max<std::size_t>(2, max_bucket + 1);
  }

  for (const auto& r : rows) {
    auto idx = set.index_of(r.label);
    if (!idx) throw input_error(csv_path.string() + ": label '" + r.label + "' missing from sidecar");
    if (set.grid.bucket_start(r.bucket) != r.start)
      throw input_error(csv_path.string() + ": bucket_start_unix disagrees with the grid for '" + r.label + "'");
    set.streams[*idx].event_buckets.push_back(r.bucket);
  }
  for (auto& s : set.streams) std::sort(s.event_buckets.begin(), s.event_buckets.end());
  set.validate();
  return set;
}

}  // namespace excite
