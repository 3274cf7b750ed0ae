#include "excite/topics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>

#include "excite/error.hpp"

namespace excite {

LdaConfig LdaConfig::with_topics(std::size_t topics) {
  LdaConfig c;
  c.topics = topics;
  c.alpha = 50.0 / static_cast<double>(topics);
  return c;
}

void LdaConfig::validate() const {
  if (topics < 2) throw config_error("topic count must be at least 2");
  if (!(alpha > 0.0)) throw config_error("alpha must be positive");
  if (!(eta > 0.0)) throw config_error("eta must be positive");
  if (sweeps <= burn_in) throw config_error("sweeps must exceed burn_in");
}

CollapsedGibbsLda::CollapsedGibbsLda(std::span<const BowDocument> docs, std::size_t vocab_size,
                                     const LdaConfig& config, const Matrix& word_prior,
                                     const Matrix* initial_topics)
    : topics_(config.topics),
      vocab_size_(vocab_size),
      alpha_(config.alpha),
      burn_in_(config.burn_in),
      target_sweeps_(config.sweeps),
      rng_(config.seed) {
  config.validate();
  if (docs.empty()) throw input_error("cannot fit topics to an empty corpus");
  if (vocab_size == 0) throw input_error("empty vocabulary");
  if (word_prior.rows() != topics_ || word_prior.cols() != vocab_size_)
    throw config_error("topic-word prior has the wrong shape");
  if (initial_topics && (initial_topics->rows() != topics_ || initial_topics->cols() != vocab_size_))
    throw config_error("initial topics have the wrong shape");

  doc_offsets_.reserve(docs.size() + 1);
  doc_offsets_.push_back(0);
  for (const auto& doc : docs) {
    if (doc.empty()) throw input_error("document '" + doc.doc_id + "' has no in-vocabulary tokens");
    for (const auto& tc : doc.counts) {
      if (tc.term >= vocab_size_) throw input_error("term index out of range in '" + doc.doc_id + "'");
      words_.insert(words_.end(), tc.count, tc.term);
    }
    doc_offsets_.push_back(words_.size());
  }
  if (words_.size() < topics_) throw input_error("more topics than tokens in the corpus");

  prior_.assign(vocab_size_ * topics_, 0.0);
  prior_total_.assign(topics_, 0.0);
  for (std::size_t k = 0; k < topics_; ++k) {
    for (std::size_t v = 0; v < vocab_size_; ++v) {
      const double p = word_prior(k, v);
      if (!(p > 0.0)) throw config_error("topic-word prior must be positive");
      prior_[v * topics_ + k] = p;
      prior_total_[k] += p;
    }
  }

  word_topic_.assign(vocab_size_ * topics_, 0);
  topic_total_.assign(topics_, 0);
  doc_topic_.assign(documents() * topics_, 0);
  assignment_.resize(words_.size());
  std::uniform_int_distribution<std::size_t> pick(0, topics_ - 1);
  std::vector<double> weights(topics_);
  for (std::size_t d = 0; d < documents(); ++d) {
    for (std::size_t i = doc_offsets_[d]; i < doc_offsets_[d + 1]; ++i) {
      std::uint32_t k = 0;
      if (initial_topics) {
        double total = 0.0;
        for (std::size_t j = 0; j < topics_; ++j) total += weights[j] = (*initial_topics)(j, words_[i]);
        k = static_cast<std::uint32_t>(total > 0.0 ? sample_categorical(weights, total, rng_) : pick(rng_));
      } else {
        k = static_cast<std::uint32_t>(pick(rng_));
      }
      assignment_[i] = k;
      ++word_topic_[words_[i] * topics_ + k];
      ++topic_total_[k];
      ++doc_topic_[d * topics_ + k];
    }
  }
  scratch_.resize(topics_);
}

void CollapsedGibbsLda::sweep() {
  const std::size_t K = topics_;
  for (std::size_t d = 0; d < documents(); ++d) {
    std::uint32_t* m = &doc_topic_[d * K];
    for (std::size_t i = doc_offsets_[d]; i < doc_offsets_[d + 1]; ++i) {
      const std::uint32_t w = words_[i];
      std::uint32_t* n = &word_topic_[w * K];
      const double* eta = &prior_[w * K];
      std::uint32_t k = assignment_[i];
      --n[k];
      --topic_total_[k];
      --m[k];

      double total = 0.0;
      for (std::size_t t = 0; t < K; ++t) {
        const double p = (m[t] + alpha_) * (n[t] + eta[t]) / (topic_total_[t] + prior_total_[t]);
        scratch_[t] = p;
        total += p;
      }
      k = static_cast<std::uint32_t>(sample_categorical(scratch_, total, rng_));

      assignment_[i] = k;
      ++n[k];
      ++topic_total_[k];
      ++m[k];
    }
  }
  ++sweeps_done_;
  if (sweeps_done_ > burn_in_) {
    if (acc_word_topic_.empty()) {
      acc_word_topic_.assign(word_topic_.size(), 0.0);
      acc_doc_topic_.assign(doc_topic_.size(), 0.0);
    }
    for (std::size_t i = 0; i < word_topic_.size(); ++i) acc_word_topic_[i] += word_topic_[i];
    for (std::size_t i = 0; i < doc_topic_.size(); ++i) acc_doc_topic_[i] += doc_topic_[i];
    ++retained_;
  }
}

void CollapsedGibbsLda::run() {
  while (sweeps_done_ < target_sweeps_) sweep();
}

Matrix CollapsedGibbsLda::beta() const {
  const std::size_t K = topics_;
  Matrix beta(K, vocab_size_);
  std::vector<double> totals(K, 0.0);
  auto count = [&](std::size_t v, std::size_t k) {
    return retained_ > 0 ? acc_word_topic_[v * K + k] / static_cast<double>(retained_)
                         : static_cast<double>(word_topic_[v * K + k]);
  };
  for (std::size_t v = 0; v < vocab_size_; ++v)
    for (std::size_t k = 0; k < K; ++k) totals[k] += count(v, k);
  for (std::size_t k = 0; k < K; ++k) {
    const double denom = totals[k] + prior_total_[k];
    for (std::size_t v = 0; v < vocab_size_; ++v) beta(k, v) = (count(v, k) + prior_[v * K + k]) / denom;
  }
  return beta;
}

std::vector<double> CollapsedGibbsLda::theta(std::size_t doc) const {
  const std::size_t K = topics_;
  const double denom = static_cast<double>(doc_length(doc)) + static_cast<double>(K) * alpha_;
  std::vector<double> out(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double m = retained_ > 0 ? acc_doc_topic_[doc * K + k] / static_cast<double>(retained_)
                                   : static_cast<double>(doc_topic_[doc * K + k]);
    out[k] = (m + alpha_) / denom;
  }
  return out;
}

namespace {

LdaFit fit_with_prior(std::span<const BowDocument> docs, std::size_t vocab_size, const LdaConfig& config,
                      const Matrix& prior, std::size_t slice_index, const Matrix* initial_topics = nullptr) {
  CollapsedGibbsLda sampler(docs, vocab_size, config, prior, initial_topics);
  sampler.run();
  LdaFit fit;
  fit.slice = {slice_index, sampler.beta()};
  fit.mixes.reserve(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d)
    fit.mixes.push_back({docs[d].doc_id, docs[d].timestamp, docs[d].source, sampler.theta(d)});
  return fit;
}

std::vector<std::uint32_t> expand_tokens(const BowDocument& doc) {
  std::vector<std::uint32_t> tokens;
  tokens.reserve(doc.length());
  for (const auto& tc : doc.counts) tokens.insert(tokens.end(), tc.count, tc.term);
  return tokens;
}

// Averaged topic counts for `tokens` under fixed topics.
std::vector<double> fixed_topic_gibbs(std::span<const std::uint32_t> tokens, const Matrix& beta, double alpha,
                                      std::size_t sweeps, Rng& rng) {
  const std::size_t K = beta.rows();
  std::vector<std::uint32_t> z(tokens.size());
  std::vector<double> m(K, 0.0);
  std::uniform_int_distribution<std::size_t> pick(0, K - 1);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] >= beta.cols()) throw input_error("term index outside the topic model vocabulary");
    z[i] = static_cast<std::uint32_t>(pick(rng));
    m[z[i]] += 1.0;
  }
  const std::size_t burn_in = sweeps / 2;
  std::vector<double> acc(K, 0.0), p(K);
  std::size_t retained = 0;
  for (std::size_t s = 0; s < sweeps; ++s) {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      m[z[i]] -= 1.0;
      double total = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        p[k] = (m[k] + alpha) * beta(k, tokens[i]);
        total += p[k];
      }
      if (!(total > 0.0)) throw numeric_error("word has zero probability under every topic");
      z[i] = static_cast<std::uint32_t>(sample_categorical(p, total, rng));
      m[z[i]] += 1.0;
    }
    if (s >= burn_in) {
      for (std::size_t k = 0; k < K; ++k) acc[k] += m[k];
      ++retained;
    }
  }
  for (auto& a : acc) a /= static_cast<double>(retained);
  return acc;
}

}  // namespace

LdaFit fit_lda(std::span<const BowDocument> docs, std::size_t vocab_size, const LdaConfig& config) {
  config.validate();
  return fit_with_prior(docs, vocab_size, config, Matrix(config.topics, vocab_size, config.eta), 0);
}

std::size_t DynamicTopicModel::slice_of(std::int64_t timestamp) const {
  if (timestamp < origin) throw input_error("timestamp precedes the first slice");
  return static_cast<std::size_t>((timestamp - origin) / slice_duration);
}

std::uint64_t slice_seed(std::uint64_t seed, std::size_t index) { return derive_seed(seed, index); }

Matrix chained_word_prior(const TopicModelSlice& previous, double eta, double kappa) {
  const auto V = static_cast<double>(previous.vocab_size());
  Matrix prior(previous.topics(), previous.vocab_size());
  for (std::size_t k = 0; k < prior.rows(); ++k)
    for (std::size_t v = 0; v < prior.cols(); ++v) prior(k, v) = eta + kappa * previous.beta(k, v) * V * eta;
  return prior;
}

DynamicFit fit_dynamic(std::span<const BowDocument> docs, std::size_t vocab_size, std::int64_t slice_duration,
                       const LdaConfig& config, double kappa) {
  config.validate();
  if (docs.empty()) throw input_error("cannot fit topics to an empty corpus");
  if (slice_duration <= 0) throw config_error("slice duration must be positive");
  if (!(kappa >= 0.0)) throw config_error("kappa must be nonnegative");

  DynamicFit result;
  auto& model = result.model;
  model.slice_duration = slice_duration;
  model.kappa = kappa;
  model.vocab_size = vocab_size;
  model.config = config;
  model.origin = std::min_element(docs.begin(), docs.end(), [](const auto& a, const auto& b) {
                   return a.timestamp < b.timestamp;
                 })->timestamp;

  std::vector<std::vector<std::size_t>> members;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const auto s = model.slice_of(docs[d].timestamp);
    if (s >= members.size()) members.resize(s + 1);
    members[s].push_back(d);
  }

  result.mixes.resize(docs.size());
  for (std::size_t t = 0; t < members.size(); ++t) {
    const Matrix prior = t == 0 ? Matrix(config.topics, vocab_size, config.eta)
                                : chained_word_prior(model.slices.back(), config.eta, kappa);
    if (members[t].empty()) {
      Matrix beta = prior;
      for (std::size_t k = 0; k < beta.rows(); ++k) {
        auto row = beta.row(k);
        const double total = std::accumulate(row.begin(), row.end(), 0.0);
        for (auto& x : row) x /= total;
      }
      model.slices.push_back({t, std::move(beta)});
      continue;
    }
    std::vector<BowDocument> slice_docs;
    slice_docs.reserve(members[t].size());
    for (auto d : members[t]) slice_docs.push_back(docs[d]);
    LdaConfig slice_config = config;
    slice_config.seed = slice_seed(config.seed, t);
    const Matrix* warm = t > 0 && kappa > 0.0 ? &model.slices.back().beta : nullptr;
    auto fit = fit_with_prior(slice_docs, vocab_size, slice_config, prior, t, warm);
    for (std::size_t i = 0; i < members[t].size(); ++i) result.mixes[members[t][i]] = std::move(fit.mixes[i]);
    model.slices.push_back(std::move(fit.slice));
  }
  return result;
}

DocTopicMix infer_mixture(const BowDocument& doc, const TopicModelSlice& slice, double alpha, std::size_t sweeps,
                          std::uint64_t seed) {
  if (doc.empty()) throw input_error("cannot infer a mixture for an empty document");
  if (!(alpha > 0.0)) throw config_error("alpha must be positive");
  if (sweeps == 0) throw config_error("sweeps must be positive");
  Rng rng(seed);
  const auto tokens = expand_tokens(doc);
  const auto m = fixed_topic_gibbs(tokens, slice.beta, alpha, sweeps, rng);
  const double denom = static_cast<double>(tokens.size()) + static_cast<double>(slice.topics()) * alpha;
  DocTopicMix mix{doc.doc_id, doc.timestamp, doc.source, std::vector<double>(slice.topics())};
  for (std::size_t k = 0; k < slice.topics(); ++k) mix.theta[k] = (m[k] + alpha) / denom;
  return mix;
}

std::vector<WeightedTerm> top_words(const TopicModelSlice& slice, std::size_t topic, std::size_t n,
                                    const Vocabulary& vocab) {
  if (topic >= slice.topics()) throw input_error("topic index out of range");
  if (vocab.size() != slice.vocab_size()) throw input_error("vocabulary does not match the topic model");
  std::vector<std::size_t> order(slice.vocab_size());
  std::iota(order.begin(), order.end(), 0);
  const auto row = slice.beta.row(topic);
  const std::size_t count = std::min(n, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (row[a] != row[b]) return row[a] > row[b];
                      return vocab.term(a) < vocab.term(b);
                    });
  std::vector<WeightedTerm> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back({vocab.term(order[i]), row[order[i]]});
  return out;
}

std::vector<TopicOccurrenceSeries> occurrence_series(std::span<const DocTopicMix> mixes, double threshold,
                                                     const BucketGrid& grid) {
  grid.validate();
  if (mixes.empty()) return {};
  const std::size_t K = mixes.front().theta.size();
  std::vector<TopicOccurrenceSeries> series(K);
  for (std::size_t k = 0; k < K; ++k)
    series[k] = {k, grid.start, grid.width, std::vector<std::uint32_t>(grid.n_buckets, 0)};
  for (const auto& mix : mixes) {
    if (mix.theta.size() != K) throw input_error("inconsistent topic count in mixtures");
    const auto b = grid.bucket_of(mix.timestamp);
    if (!b) throw input_error("document '" + mix.doc_id + "' at " + std::to_string(mix.timestamp) +
                              " lies outside the bucket grid");
    for (std::size_t k = 0; k < K; ++k)
      if (mix.theta[k] > threshold) ++series[k].counts[*b];
  }
  return series;
}

void write_topic_report(std::ostream& out, const DynamicTopicModel& model, const Vocabulary& vocab,
                        std::size_t words_per_topic) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::fixed << std::setprecision(6);
  for (const auto& slice : model.slices) {
    for (std::size_t k = 0; k < slice.topics(); ++k) {
      out << "slice " << slice.slice_index << " topic " << k << ":\n";
      for (const auto& w : top_words(slice, k, words_per_topic, vocab))
        out << "  " << w.term << ' ' << w.probability << '\n';
      out << '\n';
    }
  }
  out.flags(flags);
  out.precision(precision);
}

double heldout_perplexity(std::span<const BowDocument> docs, const TopicModelSlice& slice, double alpha,
                          std::size_t sweeps, std::uint64_t seed) {
  Rng rng(seed);
  double log_prob = 0.0;
  std::size_t scored = 0;
  for (const auto& doc : docs) {
    auto tokens = expand_tokens(doc);
    if (tokens.size() < 2) continue;
    std::shuffle(tokens.begin(), tokens.end(), rng);
    const std::size_t half = tokens.size() / 2;
    const std::span<const std::uint32_t> observed(tokens.data(), half);
    const auto m = fixed_topic_gibbs(observed, slice.beta, alpha, sweeps, rng);
    const double denom = static_cast<double>(half) + static_cast<double>(slice.topics()) * alpha;
    for (std::size_t i = half; i < tokens.size(); ++i) {
      double p = 0.0;
      for (std::size_t k = 0; k < slice.topics(); ++k) p += (m[k] + alpha) / denom * slice.beta(k, tokens[i]);
      log_prob += std::log(p);
      ++scored;
    }
  }
  if (scored == 0) throw input_error("no held-out tokens to score");
  return std::exp(-log_prob / static_cast<double>(scored));
}

std::vector<BowDocument> generate_lda_corpus(const Matrix& beta, std::size_t n_docs, double alpha,
                                             double mean_doc_length, std::uint64_t seed) {
  if (beta.rows() == 0 || beta.cols() == 0) throw config_error("empty topic matrix");
  if (!(alpha > 0.0) || !(mean_doc_length > 0.0)) throw config_error("alpha and mean length must be positive");
  Rng rng(seed);
  const std::size_t K = beta.rows();
  std::vector<std::discrete_distribution<std::uint32_t>> word_dist;
  for (std::size_t k = 0; k < K; ++k) word_dist.emplace_back(beta.row(k).begin(), beta.row(k).end());
  std::poisson_distribution<std::size_t> length(mean_doc_length);
  const std::vector<double> concentration(K, alpha);

  std::vector<BowDocument> docs;
  docs.reserve(n_docs);
  for (std::size_t d = 0; d < n_docs; ++d) {
    std::size_t n = 0;
    while (n == 0) n = length(rng);
    const auto theta = sample_dirichlet(concentration, rng);
    std::discrete_distribution<std::size_t> topic_dist(theta.begin(), theta.end());
    std::map<std::uint32_t, std::uint32_t> counts;
    for (std::size_t i = 0; i < n; ++i) ++counts[word_dist[topic_dist(rng)](rng)];
    BowDocument doc{"d" + std::to_string(d), static_cast<std::int64_t>(d), "synthetic", {}};
    for (const auto& [term, c] : counts) doc.counts.push_back({term, c});
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace excite
