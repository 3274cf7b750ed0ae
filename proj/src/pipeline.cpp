#include "excite/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "excite/config.hpp"
#include "excite/csv.hpp"
#include "excite/events.hpp"
#include "excite/ingest.hpp"
#include "excite/random.hpp"
#include "excite/report.hpp"

namespace excite {
namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) return base / path;
  return path;
}

std::size_t to_size(std::int64_t v, const std::string& what) {
  if (v < 0) throw config_error(what + " must be nonnegative");
  return static_cast<std::size_t>(v);
}

std::vector<std::size_t> default_edges(std::size_t dt_max) {
  std::vector<std::size_t> edges;
  for (std::size_t e : {(dt_max + 11) / 12, (dt_max + 2) / 3, dt_max})
    if (e >= 1 && (edges.empty() || e > edges.back())) edges.push_back(e);
  return edges;
}

void read_lda(config::SectionReader& r, LdaConfig& lda) {
  if (auto v = r.integer("topics")) {
    lda.topics = to_size(*v, "topics");
    if (lda.topics > 0) lda.alpha = 50.0 / static_cast<double>(lda.topics);
  }
  if (auto v = r.number("alpha")) lda.alpha = *v;
  if (auto v = r.number("eta")) lda.eta = *v;
  if (auto v = r.integer("sweeps")) lda.sweeps = to_size(*v, "sweeps");
  if (auto v = r.integer("burn_in")) lda.burn_in = to_size(*v, "burn_in");
}

nlohmann::ordered_json lda_json(const LdaConfig& lda) {
  return {{"topics", lda.topics}, {"alpha", lda.alpha}, {"eta", lda.eta}, {"sweeps", lda.sweeps},
          {"burn_in", lda.burn_in}};
}

class StageTimer {
 public:
  StageTimer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

template <class Write>
void write_file(const std::filesystem::path& path, Write&& write) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot write " + path.string());
  write(out);
  out.close();
  if (!out) throw input_error("failed writing " + path.string());
}

ProcessSet subset(const ProcessSet& set, const std::vector<std::string>& labels, const std::string& origin) {
  ProcessSet out{set.grid, {}};
  for (const auto& label : labels) {
    const auto i = set.index_of(label);
    if (!i) throw input_error(origin + ": no event stream labelled " + label);
    out.streams.push_back(set.streams[*i]);
  }
  return out;
}

}  // namespace

std::string sanitize_name(std::string_view name) {
  std::string out;
  for (char c : name) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
    out.push_back(ok ? c : '_');
  }
  if (out.empty()) out = "_";
  return out;
}

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::topics: return "topics";
    case Stage::events: return "events";
    case Stage::fit: return "fit";
  }
  return "unknown";
}

PipelineConfig PipelineConfig::parse(std::string_view text, const std::filesystem::path& base_dir,
                                     const std::string& origin) {
  const auto doc = config::Document::parse(text, origin);
  PipelineConfig c;

  for (const auto& section : doc.sections()) {
    const auto& n = section.name;
    const bool known = n.empty() || n == "general" || n == "corpus" || n == "topics" || n == "events" ||
                       n == "hawkes" || n.starts_with("source.") || n.starts_with("market.");
    if (!known)
      throw config_error(origin + ":" + std::to_string(section.line) + ": unknown section [" + n + "]");
  }

  config::SectionReader root(doc.find(""), origin);
  root.finish();

  config::SectionReader general(doc.find("general"), origin);
  if (auto v = general.string("output_dir")) c.output_dir = resolve(base_dir, *v);
  if (auto v = general.unsigned_integer("seed")) c.seed = *v;
  if (auto v = general.boolean("lenient")) c.lenient = *v;
  general.finish();

  config::SectionReader corpus(doc.find("corpus"), origin);
  if (auto v = corpus.integer("min_df")) c.vocabulary.min_df = to_size(*v, "min_df");
  if (auto v = corpus.number("max_df")) c.vocabulary.max_df_ratio = *v;
  if (auto v = corpus.string("vocabulary")) {
    if (*v == "pooled") c.pooled_vocabulary = true;
    else if (*v == "source") c.pooled_vocabulary = false;
    else throw config_error(origin + ": [corpus] vocabulary must be \"source\" or \"pooled\"");
  }
  if (auto v = corpus.string("stopwords")) c.stopwords = resolve(base_dir, *v);
  if (auto v = corpus.string("pos_rules")) c.pos_rules = resolve(base_dir, *v);
  corpus.finish();

  config::SectionReader topics(doc.find("topics"), origin);
  read_lda(topics, c.lda);
  if (auto v = topics.integer("slice_duration")) c.slice_duration = *v;
  if (auto v = topics.number("kappa")) c.kappa = *v;
  if (auto v = topics.integer("top_words")) c.top_words = to_size(*v, "top_words");
  topics.finish();

  config::SectionReader events(doc.find("events"), origin);
  if (auto v = events.number("threshold")) c.occurrence_threshold = *v;
  if (auto v = events.integer("bucket_width")) c.bucket_width = *v;
  if (auto v = events.number("percentile")) c.percentile = *v;
  if (auto v = events.number("count_smoothing")) c.count_smoothing = *v;
  if (auto v = events.integer("grid_start")) c.grid_start = *v;
  if (auto v = events.integer("grid_end")) c.grid_end = *v;
  events.finish();

  config::SectionReader hawkes(doc.find("hawkes"), origin);
  const auto dt_max = hawkes.integer("dt_max");
  const auto edges = hawkes.integers("basis_edges");
  if (edges) {
    c.basis_edges.clear();
    for (auto e : *edges) c.basis_edges.push_back(to_size(e, "basis_edges"));
    if (c.basis_edges.empty()) throw config_error(origin + ": [hawkes] basis_edges is empty");
    c.dt_max = c.basis_edges.back();
    if (dt_max && to_size(*dt_max, "dt_max") != c.dt_max)
      throw config_error(origin + ": [hawkes] dt_max must equal the last basis edge");
  } else if (dt_max) {
    c.dt_max = to_size(*dt_max, "dt_max");
    c.basis_edges = default_edges(c.dt_max);
  }
  if (auto v = hawkes.integer("iterations")) c.gibbs.iterations = to_size(*v, "iterations");
  if (auto v = hawkes.integer("burn_in")) c.gibbs.burn_in = to_size(*v, "burn_in");
  if (auto v = hawkes.integer("thinning")) c.gibbs.thinning = to_size(*v, "thinning");
  if (auto v = hawkes.number("lambda0_shape")) c.gibbs.lambda0.shape = *v;
  if (auto v = hawkes.number("lambda0_rate")) c.gibbs.lambda0.rate = *v;
  if (auto v = hawkes.number("weight_shape")) c.gibbs.weight.shape = *v;
  if (auto v = hawkes.number("weight_rate")) c.gibbs.weight.rate = *v;
  if (auto v = hawkes.number("impulse_concentration")) c.gibbs.impulse_concentration = *v;
  if (auto v = hawkes.string("models")) {
    if (*v == "market") c.per_market_models = true;
    else if (*v == "pooled") c.per_market_models = false;
    else throw config_error(origin + ": [hawkes] models must be \"market\" or \"pooled\"");
  }
  if (auto v = hawkes.string("events")) c.events_path = resolve(base_dir, *v);
  hawkes.finish();

  for (const auto& section : doc.sections()) {
    if (section.name.starts_with("market.")) {
      MarketConfig m;
      m.name = section.name.substr(7);
      config::SectionReader r(&section, origin);
      const auto ticks = r.string("ticks");
      if (!ticks) throw config_error(origin + ": [" + section.name + "] needs ticks");
      m.ticks = resolve(base_dir, *ticks);
      r.finish();
      c.markets.push_back(std::move(m));
    }
  }
  for (const auto& section : doc.sections()) {
    if (!section.name.starts_with("source.")) continue;
    SourceConfig s;
    s.name = section.name.substr(7);
    s.label = s.name;
    s.lda = c.lda;
    config::SectionReader r(&section, origin);
    const auto path = r.string("submissions");
    if (!path) throw config_error(origin + ": [" + section.name + "] needs submissions");
    s.submissions = resolve(base_dir, *path);
    if (auto v = r.string("label")) s.label = *v;
    if (auto v = r.string("market")) s.market = *v;
    if (auto v = r.integers("selected_topics"))
      for (auto k : *v) s.selected_topics.push_back(to_size(k, "selected_topics"));
    read_lda(r, s.lda);
    r.finish();
    if (s.market.empty() && c.markets.size() == 1) s.market = c.markets.front().name;
    c.sources.push_back(std::move(s));
  }

  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.parent_path(), path.string());
}

void PipelineConfig::validate() const {
  if (output_dir.empty()) throw config_error("output_dir is empty");
  if (!(vocabulary.max_df_ratio > 0.0 && vocabulary.max_df_ratio <= 1.0))
    throw config_error("max_df must lie in (0, 1]");
  lda.validate();
  if (slice_duration <= 0) throw config_error("slice_duration must be positive");
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw config_error("kappa must be nonnegative");
  if (top_words == 0) throw config_error("top_words must be positive");
  if (!(occurrence_threshold >= 0.0 && occurrence_threshold < 1.0))
    throw config_error("occurrence threshold must lie in [0, 1)");
  if (bucket_width <= 0) throw config_error("bucket_width must be positive");
  if (!(percentile > 0.0 && percentile < 1.0)) throw config_error("percentile must lie in (0, 1)");
  if (!(count_smoothing > 0.0)) throw config_error("count_smoothing must be positive");
  if (grid_start && grid_end && *grid_end <= *grid_start) throw config_error("grid_end must follow grid_start");
  ImpulseBasis::boxcars(basis_edges).validate();
  if (basis_edges.back() != dt_max) throw config_error("dt_max must equal the last basis edge");
  gibbs.validate();

  std::set<std::string> names;
  std::set<std::string> labels;
  for (const auto& m : markets) {
    if (!names.insert("market." + m.name).second) throw config_error("duplicate market " + m.name);
    for (const auto& l : {m.name + "_pos", m.name + "_neg"})
      if (!labels.insert(l).second) throw config_error("duplicate process label " + l);
  }
  for (const auto& s : sources) {
    s.lda.validate();
    for (auto k : s.selected_topics) {
      if (k >= s.lda.topics)
        throw config_error("source " + s.name + ": selected topic " + std::to_string(k) + " is not below K = " +
                           std::to_string(s.lda.topics));
      if (!labels.insert(topic_label(s, k)).second)
        throw config_error("duplicate process label " + topic_label(s, k));
    }
    if (!s.market.empty() && std::none_of(markets.begin(), markets.end(), [&](const MarketConfig& m) {
          return m.name == s.market;
        }))
      throw config_error("source " + s.name + " refers to unknown market " + s.market);
    if (per_market_models && markets.size() > 1 && s.market.empty() && !s.selected_topics.empty())
      throw config_error("source " + s.name + " must name its market when several are configured");
  }
  if ((!sources.empty() || !markets.empty()) && labels.size() < 2)
    throw config_error("at least two processes are required (selected topics plus market streams)");
}

std::string PipelineConfig::topic_label(const SourceConfig& source, std::size_t topic) const {
  return source.label + "_" + std::to_string(topic);
}

std::vector<std::string> PipelineConfig::process_labels() const {
  std::vector<std::string> labels;
  for (const auto& s : sources)
    for (auto k : s.selected_topics) labels.push_back(topic_label(s, k));
  for (const auto& m : markets) {
    labels.push_back(m.name + "_pos");
    labels.push_back(m.name + "_neg");
  }
  return labels;
}

nlohmann::ordered_json PipelineConfig::to_json() const {
  nlohmann::ordered_json j;
  j["general"] = {{"output_dir", output_dir.string()}, {"seed", seed}, {"lenient", lenient}};
  j["corpus"] = {{"min_df", vocabulary.min_df},
                 {"max_df", vocabulary.max_df_ratio},
                 {"vocabulary", pooled_vocabulary ? "pooled" : "source"},
                 {"stopwords", stopwords ? stopwords->string() : std::string("bundled")},
                 {"pos_rules", pos_rules ? pos_rules->string() : std::string("bundled")}};
  auto topics = lda_json(lda);
  topics["slice_duration"] = slice_duration;
  topics["kappa"] = kappa;
  topics["top_words"] = top_words;
  j["topics"] = std::move(topics);
  nlohmann::ordered_json events = {{"threshold", occurrence_threshold},
                                   {"bucket_width", bucket_width},
                                   {"percentile", percentile},
                                   {"count_smoothing", count_smoothing}};
  if (grid_start) events["grid_start"] = *grid_start;
  if (grid_end) events["grid_end"] = *grid_end;
  j["events"] = std::move(events);
  nlohmann::ordered_json hawkes = {{"dt_max", dt_max},
                                   {"basis_edges", basis_edges},
                                   {"iterations", gibbs.iterations},
                                   {"burn_in", gibbs.burn_in},
                                   {"thinning", gibbs.thinning},
                                   {"lambda0_shape", gibbs.lambda0.shape},
                                   {"lambda0_rate", gibbs.lambda0.rate},
                                   {"weight_shape", gibbs.weight.shape},
                                   {"weight_rate", gibbs.weight.rate},
                                   {"impulse_concentration", gibbs.impulse_concentration},
                                   {"models", per_market_models ? "market" : "pooled"}};
  if (events_path) hawkes["events"] = events_path->string();
  j["hawkes"] = std::move(hawkes);
  auto sources_json = nlohmann::ordered_json::object();
  for (const auto& s : sources) {
    auto sj = lda_json(s.lda);
    sj["submissions"] = s.submissions.string();
    sj["label"] = s.label;
    sj["market"] = s.market;
    sj["selected_topics"] = s.selected_topics;
    sources_json[s.name] = std::move(sj);
  }
  j["source"] = std::move(sources_json);
  auto markets_json = nlohmann::ordered_json::object();
  for (const auto& m : markets) markets_json[m.name] = {{"ticks", m.ticks.string()}};
  j["market"] = std::move(markets_json);
  return j;
}

nlohmann::ordered_json RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["completed"] = completed;
  j["config"] = config;
  auto stages_json = nlohmann::ordered_json::array();
  for (const auto& s : stages) {
    nlohmann::ordered_json sj = {{"name", s.name}, {"completed", s.completed}, {"seconds", s.seconds},
                                 {"counts", s.counts}};
    if (!s.error.empty()) sj["error"] = s.error;
    stages_json.push_back(std::move(sj));
  }
  j["stages"] = std::move(stages_json);
  j["outputs"] = outputs;
  j["seeds"] = seeds;
  j["warnings"] = warnings;
  return j;
}

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)) { config_.validate(); }

void Pipeline::run_all() {
  const Stage all[] = {Stage::topics, Stage::events, Stage::fit};
  run(all);
}

void Pipeline::run(std::span<const Stage> stages) {
  manifest_ = RunManifest{};
  manifest_.config = config_.to_json();
  try {
    std::filesystem::create_directories(config_.output_dir);
  } catch (const std::filesystem::filesystem_error& e) {
    throw input_error("cannot create output directory " + config_.output_dir.string() + ": " + e.what());
  }

  for (Stage stage : stages) {
    StageRecord record;
    record.name = std::string(stage_name(stage));
    const StageTimer timer;
    try {
      switch (stage) {
        case Stage::topics: run_topics(record); break;
        case Stage::events: run_events(record); break;
        case Stage::fit: run_fit(record); break;
      }
    } catch (const std::exception& e) {
      const auto* err = dynamic_cast<const Error*>(&e);
      const ErrorKind kind = err ? err->kind() : ErrorKind::input;
      record.seconds = timer.seconds();
      record.error = e.what();
      manifest_.stages.push_back(std::move(record));
      write_manifest();
      if (!err && !dynamic_cast<const std::filesystem::filesystem_error*>(&e)) throw;
      throw Error(kind, std::string(stage_name(stage)) + ": " + e.what());
    }
    record.completed = true;
    record.seconds = timer.seconds();
    manifest_.stages.push_back(std::move(record));
  }
  manifest_.completed = true;
  write_manifest();
}

void Pipeline::add_output(const std::filesystem::path& path) {
  const auto rel = path.lexically_relative(config_.output_dir).generic_string();
  if (std::find(manifest_.outputs.begin(), manifest_.outputs.end(), rel) == manifest_.outputs.end())
    manifest_.outputs.push_back(rel);
}

void Pipeline::write_manifest() {
  const auto path = manifest_path();
  add_output(path);
  write_file(path, [&](std::ostream& out) { out << manifest_.to_json().dump(2) << '\n'; });
}

void Pipeline::run_topics(StageRecord& record) {
  if (config_.sources.empty()) throw config_error("no sources configured");
  const Stoplist stoplist = config_.stopwords ? load_stoplist(*config_.stopwords) : default_stoplist();
  std::optional<HeuristicTagger> custom_tagger;
  if (config_.pos_rules) custom_tagger = HeuristicTagger::from_file(*config_.pos_rules);
  const PosTagger& tagger = custom_tagger ? static_cast<const PosTagger&>(*custom_tagger) : HeuristicTagger::bundled();

  std::vector<std::vector<ProcessedDocument>> processed(config_.sources.size());
  for (std::size_t i = 0; i < config_.sources.size(); ++i) {
    const auto& source = config_.sources[i];
    auto read = read_submissions(source.submissions, {config_.lenient});
    for (const auto& d : read.diagnostics) manifest_.warnings.push_back(d);
    if (read.records.empty()) throw input_error("source " + source.name + " has no submissions");
    processed[i].reserve(read.records.size());
    for (const auto& rec : read.records) processed[i].push_back(preprocess(rec, stoplist, tagger));
    record.counts["submissions." + source.name] = read.records.size();
    record.counts["skipped." + source.name] = read.skipped;
  }

  std::optional<Vocabulary> pooled;
  if (config_.pooled_vocabulary) {
    std::vector<ProcessedDocument> all;
    for (const auto& p : processed) all.insert(all.end(), p.begin(), p.end());
    pooled = build_vocabulary(all, config_.vocabulary);
  }

  for (std::size_t i = 0; i < config_.sources.size(); ++i) {
    const auto& source = config_.sources[i];
    const Vocabulary vocab = pooled ? *pooled : build_vocabulary(processed[i], config_.vocabulary);
    if (vocab.size() == 0) throw input_error("source " + source.name + ": vocabulary is empty after pruning");

    std::vector<BowDocument> docs;
    std::size_t dropped = 0;
    for (const auto& p : processed[i]) {
      auto bow = vectorize(p, vocab);
      if (bow.empty()) ++dropped;
      else docs.push_back(std::move(bow));
    }
    if (docs.empty()) throw input_error("source " + source.name + ": every document is empty after pruning");
    if (dropped > 0)
      manifest_.warnings.push_back("source " + source.name + ": " + std::to_string(dropped) +
                                   " documents empty after pruning were left out");

    LdaConfig lda = source.lda;
    lda.seed = derive_seed(config_.seed, fnv1a("topics/" + source.name));
    manifest_.seeds["topics/" + source.name] = lda.seed;
    const auto fitted = fit_dynamic(docs, vocab.size(), config_.slice_duration, lda, config_.kappa);

    const auto name = sanitize_name(source.name);
    const auto report = config_.output_dir / ("topics_" + name + ".txt");
    write_file(report, [&](std::ostream& out) { write_topic_report(out, fitted.model, vocab, config_.top_words); });
    add_output(report);
    const auto theta = config_.output_dir / ("theta_" + name + ".csv");
    write_file(theta, [&](std::ostream& out) { write_theta_csv(out, fitted.mixes, lda.topics); });
    add_output(theta);

    record.counts["documents." + source.name] = docs.size();
    record.counts["dropped_empty." + source.name] = dropped;
    record.counts["vocabulary." + source.name] = vocab.size();
    record.counts["slices." + source.name] = fitted.model.slices.size();
  }
}

void Pipeline::run_events(StageRecord& record) {
  if (config_.sources.empty() && config_.markets.empty()) throw config_error("no sources or markets configured");

  std::vector<std::vector<DocTopicMix>> mixes;
  std::optional<std::int64_t> first, last;
  auto extend = [&](std::int64_t t) {
    first = first ? std::min(*first, t) : t;
    last = last ? std::max(*last, t) : t;
  };
  for (const auto& source : config_.sources) {
    const auto path = config_.output_dir / ("theta_" + sanitize_name(source.name) + ".csv");
    if (!std::filesystem::exists(path))
      throw input_error(path.string() + " not found; run the topics stage first");
    auto m = read_theta_csv(path);
    if (!m.empty() && m.front().theta.size() != source.lda.topics)
      throw input_error(path.string() + ": expected " + std::to_string(source.lda.topics) + " topics");
    for (const auto& d : m) extend(d.timestamp);
    record.counts["documents." + source.name] = m.size();
    mixes.push_back(std::move(m));
  }
  std::vector<std::vector<TickRecord>> ticks;
  for (const auto& market : config_.markets) {
    auto read = read_ticks(market.ticks, {config_.lenient});
    for (const auto& d : read.diagnostics) manifest_.warnings.push_back(d);
    if (read.records.empty()) throw input_error("market " + market.name + " has no ticks");
    for (const auto& t : read.records) extend(t.timestamp_ms / 1000 - (t.timestamp_ms % 1000 < 0 ? 1 : 0));
    record.counts["ticks." + market.name] = read.records.size();
    ticks.push_back(std::move(read.records));
  }
  if (!first) throw input_error("no documents or ticks to place on the bucket grid");

  const auto grid_first = config_.grid_start.value_or(*first);
  const auto grid_last = config_.grid_end ? *config_.grid_end - 1 : *last;
  const auto grid = BucketGrid::covering(grid_first, grid_last, config_.bucket_width);
  record.counts["buckets"] = grid.n_buckets;
  record.counts["grid_start"] = grid.start;

  ProcessSet set{grid, {}};
  for (std::size_t i = 0; i < config_.sources.size(); ++i) {
    const auto& source = config_.sources[i];
    if (source.selected_topics.empty()) continue;
    std::vector<DocTopicMix> inside;
    for (const auto& m : mixes[i])
      if (grid.contains(m.timestamp)) inside.push_back(m);
    if (inside.size() < mixes[i].size())
      manifest_.warnings.push_back("source " + source.name + ": " + std::to_string(mixes[i].size() - inside.size()) +
                                   " documents outside the bucket grid were ignored");
    auto series = occurrence_series(inside, config_.occurrence_threshold, grid);
    for (auto k : source.selected_topics) {
      BucketSeries counts{grid, {}, SeriesKind::count};
      if (series.empty()) counts.values.assign(grid.n_buckets, 0.0);
      else counts.values.assign(series[k].counts.begin(), series[k].counts.end());
      const auto returns = log_returns(counts, config_.count_smoothing);
      set.streams.push_back(detect_jumps(returns, config_.percentile, JumpDirection::up, config_.topic_label(source, k)));
    }
  }
  for (std::size_t i = 0; i < config_.markets.size(); ++i) {
    const auto& market = config_.markets[i];
    const auto prices = bucketize_prices(ticks[i], grid);
    const auto returns = log_returns(prices);
    set.streams.push_back(detect_jumps(returns, config_.percentile, JumpDirection::up, market.name + "_pos"));
    set.streams.push_back(detect_jumps(returns, config_.percentile, JumpDirection::down, market.name + "_neg"));
  }
  set.validate();
  if (set.streams.size() < 2) throw config_error("at least two event streams are required");

  for (const auto& s : set.streams) {
    record.counts["events." + s.label] = s.event_buckets.size();
    if (s.event_buckets.empty()) manifest_.warnings.push_back("stream " + s.label + " has no events");
  }
  record.counts["processes"] = set.streams.size();
  record.counts["events"] = set.total_events();

  const auto csv_path = config_.output_dir / "events.csv";
  write_events(csv_path, set);
  add_output(csv_path);
  add_output(event_meta_path(csv_path));

  const auto overlap_path = config_.output_dir / "overlap.txt";
  write_file(overlap_path, [&](std::ostream& out) {
    out << "processes " << set.streams.size() << '\n';
    out << "events " << set.total_events() << '\n';
    if (set.total_events() > 0) out << "non_overlapping_fraction " << csv::format_exact(overlap_fraction(set)) << '\n';
    else out << "non_overlapping_fraction n/a\n";
    for (const auto& s : set.streams) out << "stream " << s.label << ' ' << s.event_buckets.size() << '\n';
  });
  add_output(overlap_path);
  if (set.total_events() > 0) record.counts["non_overlapping_fraction"] = overlap_fraction(set);
}

void Pipeline::run_fit(StageRecord& record) {
  const auto path = config_.events_path.value_or(config_.output_dir / "events.csv");
  if (!std::filesystem::exists(path)) throw input_error(path.string() + " not found; run the events stage first");
  const auto set = read_events(path);

  std::vector<std::pair<std::string, ProcessSet>> groups;
  if (config_.per_market_models && !config_.markets.empty()) {
    for (const auto& market : config_.markets) {
      std::vector<std::string> labels;
      for (const auto& s : config_.sources)
        if (s.market == market.name)
          for (auto k : s.selected_topics) labels.push_back(config_.topic_label(s, k));
      labels.push_back(market.name + "_pos");
      labels.push_back(market.name + "_neg");
      groups.emplace_back(market.name, subset(set, labels, path.string()));
    }
  } else if (!config_.sources.empty() || !config_.markets.empty()) {
    groups.emplace_back("all", subset(set, config_.process_labels(), path.string()));
  } else {
    groups.emplace_back("all", set);
  }

  const auto basis = ImpulseBasis::boxcars(config_.basis_edges);
  for (const auto& [group, processes] : groups) {
    if (processes.streams.size() < 2)
      throw config_error("model " + group + " needs at least two event streams, found " +
                         std::to_string(processes.streams.size()));
    GibbsConfig gibbs = config_.gibbs;
    gibbs.seed = derive_seed(config_.seed, fnv1a("fit/" + group));
    manifest_.seeds["fit/" + group] = gibbs.seed;
    const auto summary = fit(processes, basis, gibbs);

    const auto name = sanitize_name(group);
    const auto weights = config_.output_dir / ("weights_" + name + ".csv");
    write_file(weights, [&](std::ostream& out) { write_weight_csv(out, summary); });
    add_output(weights);
    const auto posterior = config_.output_dir / ("posterior_" + name + ".json");
    write_file(posterior, [&](std::ostream& out) { out << posterior_json(summary).dump(2) << '\n'; });
    add_output(posterior);
    const auto heatmap = config_.output_dir / ("heatmap_" + name + ".svg");
    write_file(heatmap, [&](std::ostream& out) { write_heatmap_svg(out, summary, "Hawkes weights: " + group); });
    add_output(heatmap);

    record.counts["processes." + group] = processes.streams.size();
    record.counts["events." + group] = processes.total_events();
    record.counts["samples." + group] = summary.n_samples;
  }
}

}  // namespace excite
