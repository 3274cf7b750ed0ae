#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "excite/corpus.hpp"
#include "excite/error.hpp"
#include "excite/hawkes.hpp"
#include "excite/topics.hpp"

namespace excite {

struct SourceConfig {
  std::string name;                  // [source.<name>]
  std::filesystem::path submissions;
  std::string label;                 // process label prefix, defaults to name
  std::string market;                // market whose model includes this source
  std::vector<std::size_t> selected_topics;
  LdaConfig lda;
};

struct MarketConfig {
  std::string name;  // [market.<name>], also the label prefix
  std::filesystem::path ticks;
};

struct PipelineConfig {
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 1;
  bool lenient = false;

  VocabularyOptions vocabulary;
  bool pooled_vocabulary = false;
  std::optional<std::filesystem::path> stopwords;
  std::optional<std::filesystem::path> pos_rules;

  LdaConfig lda;  // defaults for every source
  std::int64_t slice_duration = 7 * 24 * 3600;
  double kappa = 1.0;
  std::size_t top_words = 10;

  double occurrence_threshold = 0.1;
  std::int64_t bucket_width = kDefaultBucketWidth;
  double percentile = 0.99;
  double count_smoothing = 1.0;
  std::optional<std::int64_t> grid_start;
  std::optional<std::int64_t> grid_end;

  std::size_t dt_max = kDefaultMaxLag;
  std::vector<std::size_t> basis_edges = {8, 32, 96};
  GibbsConfig gibbs;
  bool per_market_models = true;
  std::optional<std::filesystem::path> events_path;

  std::vector<SourceConfig> sources;
  std::vector<MarketConfig> markets;

  // Parses the TOML subset; relative paths resolve against base_dir.
  static PipelineConfig parse(std::string_view text, const std::filesystem::path& base_dir = {},
                              const std::string& origin = "<config>");
  static PipelineConfig load(const std::filesystem::path& path);

  // Throws config_error for out-of-range values or selected topics >= K.
  void validate() const;
  nlohmann::ordered_json to_json() const;

  // Process labels in configured order: selected topics of each source,
  // then <MKT>_pos and <MKT>_neg for each market.
  std::vector<std::string> process_labels() const;
  std::string topic_label(const SourceConfig& source, std::size_t topic) const;
};

enum class Stage { topics, events, fit };
std::string_view stage_name(Stage stage);

struct StageRecord {
  std::string name;
  bool completed = false;
  double seconds = 0.0;
  nlohmann::ordered_json counts = nlohmann::ordered_json::object();
  std::string error;
};

struct RunManifest {
  nlohmann::ordered_json config;
  std::vector<StageRecord> stages;
  std::vector<std::string> outputs;  // relative to the output directory
  std::map<std::string, std::uint64_t> seeds;
  std::vector<std::string> warnings;
  bool completed = false;

  nlohmann::ordered_json to_json() const;
};

// Stage failures are rethrown with the stage name prefixed, keeping the
// error kind.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config);

  // Runs the stages in order, stopping at the first failure; manifest.json
  // is written last either way.
  void run(std::span<const Stage> stages);
  void run_all();

  const PipelineConfig& config() const noexcept { return config_; }
  const RunManifest& manifest() const noexcept { return manifest_; }
  std::filesystem::path manifest_path() const { return config_.output_dir / "manifest.json"; }

 private:
  void run_topics(StageRecord& record);
  void run_events(StageRecord& record);
  void run_fit(StageRecord& record);
  void add_output(const std::filesystem::path& path);
  void write_manifest();

  PipelineConfig config_;
  RunManifest manifest_;
};

// File-name-safe form of a source, market or group name.
std::string sanitize_name(std::string_view name);

}  // namespace excite
