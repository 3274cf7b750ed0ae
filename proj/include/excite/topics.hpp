#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "excite/corpus.hpp"
#include "excite/grid.hpp"
#include "excite/matrix.hpp"
#include "excite/random.hpp"

namespace excite {

struct LdaConfig {
  std::size_t topics = 30;
  double alpha = 50.0 / 30.0;  // symmetric document-topic concentration
  double eta = 0.01;           // symmetric topic-word concentration
  std::size_t sweeps = 500;
  std::size_t burn_in = 250;
  std::uint64_t seed = 0;
  double mean_doc_length = 80.0;  // synthetic generator only

  // Defaults with alpha = 50 / topics.
  static LdaConfig with_topics(std::size_t topics);

  void validate() const;
};

struct TopicModelSlice {
  std::size_t slice_index = 0;
  Matrix beta;  // topics x vocabulary, rows on the simplex

  std::size_t topics() const noexcept { return beta.rows(); }
  std::size_t vocab_size() const noexcept { return beta.cols(); }
};

struct DocTopicMix {
  std::string doc_id;
  std::int64_t timestamp = 0;
  std::string source;
  std::vector<double> theta;  // on the simplex
};

struct LdaFit {
  TopicModelSlice slice;
  std::vector<DocTopicMix> mixes;  // same order as the input documents
};

// Collapsed Gibbs sampler over token-topic assignments. The topic-word prior
// may vary per (topic, word); fit_lda uses a flat one. Assignments start
// uniform, or drawn from `initial_topics` (topics x vocabulary) when given.
class CollapsedGibbsLda {
 public:
  CollapsedGibbsLda(std::span<const BowDocument> docs, std::size_t vocab_size, const LdaConfig& config,
                    const Matrix& word_prior, const Matrix* initial_topics = nullptr);

  // One full pass over every token; counts after sweeps > burn_in are
  // accumulated for the point estimate.
  void sweep();
  // Sweeps until the configured total is reached.
  void run();

  std::size_t sweeps_done() const noexcept { return sweeps_done_; }
  std::size_t topics() const noexcept { return topics_; }
  std::size_t vocab_size() const noexcept { return vocab_size_; }
  std::size_t documents() const noexcept { return doc_offsets_.size() - 1; }

  std::uint32_t topic_word_count(std::size_t topic, std::size_t word) const {
    return word_topic_[word * topics_ + topic];
  }
  std::uint32_t topic_count(std::size_t topic) const { return topic_total_[topic]; }
  std::uint32_t doc_topic_count(std::size_t doc, std::size_t topic) const {
    return doc_topic_[doc * topics_ + topic];
  }
  std::size_t doc_length(std::size_t doc) const { return doc_offsets_[doc + 1] - doc_offsets_[doc]; }

  // Averaged post-burn-in counts, or the current state if none retained yet.
  Matrix beta() const;
  std::vector<double> theta(std::size_t doc) const;

 private:
  std::size_t topics_;
  std::size_t vocab_size_;
  double alpha_;
  std::size_t burn_in_;
  std::size_t target_sweeps_;

  std::vector<std::uint32_t> words_;
  std::vector<std::uint32_t> assignment_;
  std::vector<std::size_t> doc_offsets_;

  std::vector<std::uint32_t> word_topic_;  // vocab x topics
  std::vector<std::uint32_t> topic_total_;
  std::vector<std::uint32_t> doc_topic_;  // docs x topics

  std::vector<double> prior_;  // vocab x topics
  std::vector<double> prior_total_;

  std::vector<double> acc_word_topic_;
  std::vector<double> acc_doc_topic_;
  std::size_t retained_ = 0;
  std::size_t sweeps_done_ = 0;

  Rng rng_;
  std::vector<double> scratch_;
};

// Throws input_error for an empty corpus, an empty document, a term index
// outside the vocabulary, or more topics than tokens.
LdaFit fit_lda(std::span<const BowDocument> docs, std::size_t vocab_size, const LdaConfig& config);

struct DynamicTopicModel {
  std::vector<TopicModelSlice> slices;  // slice_index 0, 1, ...
  std::int64_t origin = 0;              // start of slice 0
  std::int64_t slice_duration = 7 * 24 * 3600;
  double kappa = 0.0;
  std::size_t vocab_size = 0;
  LdaConfig config;

  std::size_t slice_of(std::int64_t timestamp) const;
};

struct DynamicFit {
  DynamicTopicModel model;
  std::vector<DocTopicMix> mixes;  // same order as the input documents
};

// Seed used for slice `index` when fitting with base seed `seed`.
std::uint64_t slice_seed(std::uint64_t seed, std::size_t index);

// Prior for the slice after `previous`: eta + kappa * beta[k][v] * V * eta.
Matrix chained_word_prior(const TopicModelSlice& previous, double eta, double kappa);

// Documents are assigned to slices of `slice_duration` seconds counted from
// the earliest timestamp. Slice 0 is plain LDA; each later slice uses the
// chained prior of the one before and, when kappa > 0, starts its
// assignments from the previous topics so topic indices stay aligned. A
// slice without documents keeps the prior mean as its topics.
DynamicFit fit_dynamic(std::span<const BowDocument> docs, std::size_t vocab_size, std::int64_t slice_duration,
                       const LdaConfig& config, double kappa);

// Gibbs over one document's assignments with the topics held fixed; the
// first half of the sweeps is burn-in.
DocTopicMix infer_mixture(const BowDocument& doc, const TopicModelSlice& slice, double alpha, std::size_t sweeps,
                          std::uint64_t seed);

struct WeightedTerm {
  std::string term;
  double probability = 0.0;

  friend bool operator==(const WeightedTerm&, const WeightedTerm&) = default;
};

// Descending probability, ties broken lexicographically; at most V terms.
std::vector<WeightedTerm> top_words(const TopicModelSlice& slice, std::size_t topic, std::size_t n,
                                    const Vocabulary& vocab);

struct TopicOccurrenceSeries {
  std::size_t topic_index = 0;
  std::int64_t bucket_start = 0;
  std::int64_t bucket_width = kDefaultBucketWidth;
  std::vector<std::uint32_t> counts;
};

// counts[b] = documents in bucket b with theta[k] strictly above threshold.
std::vector<TopicOccurrenceSeries> occurrence_series(std::span<const DocTopicMix> mixes, double threshold,
                                                     const BucketGrid& grid);

// `slice <t> topic <k>:` blocks with n probability-annotated terms each.
void write_topic_report(std::ostream& out, const DynamicTopicModel& model, const Vocabulary& vocab,
                        std::size_t words_per_topic = 10);

// Document-completion perplexity: theta is inferred from the first half
// of each held-out document and the second half is scored.
double heldout_perplexity(std::span<const BowDocument> docs, const TopicModelSlice& slice, double alpha,
                          std::size_t sweeps, std::uint64_t seed);

// Draws documents from the LDA generative process: length ~ Poisson(mean
// length), theta ~ Dir(alpha), then a topic and a word per token.
std::vector<BowDocument> generate_lda_corpus(const Matrix& beta, std::size_t n_docs, double alpha,
                                             double mean_doc_length, std::uint64_t seed);

}  // namespace excite
