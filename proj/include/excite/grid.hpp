#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

namespace excite {

inline constexpr std::int64_t kDefaultBucketWidth = 900;  // fifteen minutes

// Half-open buckets [start + i*width, start + (i+1)*width).
struct BucketGrid {
  std::int64_t start = 0;  // multiple of width
  std::int64_t width = kDefaultBucketWidth;
  std::size_t n_buckets = 0;

  // Throws config_error unless start % width == 0 and n_buckets >= 2.
  void validate() const;

  std::int64_t end() const noexcept { return start + static_cast<std::int64_t>(n_buckets) * width; }
  std::int64_t bucket_start(std::size_t index) const noexcept {
    return start + static_cast<std::int64_t>(index) * width;
  }
  bool contains(std::int64_t t) const noexcept { return t >= start && t < end(); }
  std::optional<std::size_t> bucket_of(std::int64_t t) const noexcept;

  // Smallest aligned grid containing [first, last], at least two buckets.
  static BucketGrid covering(std::int64_t first, std::int64_t last, std::int64_t width = kDefaultBucketWidth);

  friend bool operator==(const BucketGrid&, const BucketGrid&) = default;
};

}  // namespace excite
