#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "excite/ingest.hpp"

namespace excite {

struct ProcessedDocument {
  std::string id;
  std::int64_t timestamp = 0;
  std::string source;
  std::vector<std::string> tokens;  // lowercase, >= 2 characters
};

// Lowercases, strips URLs (http://, https://, www. up to the next
// whitespace) and splits on anything that is not a letter, a digit or an
// apostrophe between two word characters. Tokens shorter than two
// characters are dropped. Non-ASCII code points outside the punctuation and
// symbol blocks count as letters; U+2019 is read as an apostrophe.
std::vector<std::string> tokenize(std::string_view text);

using Stoplist = std::unordered_set<std::string>;

// One entry per line, '#' comments. Entries are lowercased.
Stoplist parse_word_list(std::string_view text);
Stoplist load_stoplist(const std::filesystem::path& path);

// The list shipped in data/stopwords_en.txt.
const Stoplist& default_stoplist();

std::vector<std::string> remove_stopwords(std::span<const std::string> tokens, const Stoplist& stoplist);

enum class PosTag { noun, adjective, verb, adverb, closed };

class PosTagger {
 public:
  virtual ~PosTagger() = default;
  virtual PosTag tag(std::string_view token) const = 0;
};

// Rule-based tagger: closed-class words, known adjectives, known verbs and
// their -s/-ing/-ed forms, then adverb and adjective suffixes; anything else
// is a noun. Rules use the format of data/pos_rules.txt.
class HeuristicTagger final : public PosTagger {
 public:
  static const HeuristicTagger& bundled();
  static HeuristicTagger from_rules(std::string_view text);
  static HeuristicTagger from_file(const std::filesystem::path& path);

  PosTag tag(std::string_view token) const override;

 private:
  bool is_verb_form(std::string_view token) const;

  std::unordered_set<std::string> closed_;
  std::unordered_set<std::string> verbs_;
  std::unordered_set<std::string> adjectives_;
  std::vector<std::string> adverb_suffixes_;
  std::vector<std::string> adjective_suffixes_;
};

// Keeps nouns and adjectives, in order.
std::vector<std::string> filter_pos(std::span<const std::string> tokens, const PosTagger& tagger);

// tokenize -> remove_stopwords -> filter_pos.
ProcessedDocument preprocess(const RawSubmission& submission, const Stoplist& stoplist, const PosTagger& tagger);

struct VocabularyOptions {
  std::size_t min_df = 20;
  double max_df_ratio = 0.5;
};

class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> terms, std::vector<std::size_t> doc_frequency, std::size_t corpus_size);

  std::size_t size() const noexcept { return terms_.size(); }
  const std::vector<std::string>& terms() const noexcept { return terms_; }
  const std::string& term(std::size_t index) const { return terms_.at(index); }
  std::size_t doc_frequency(std::size_t index) const { return doc_frequency_.at(index); }
  std::size_t corpus_size() const noexcept { return corpus_size_; }
  std::optional<std::uint32_t> index_of(const std::string& term) const;

 private:
  std::vector<std::string> terms_;  // sorted, unique
  std::vector<std::size_t> doc_frequency_;
  std::size_t corpus_size_ = 0;
  std::unordered_map<std::string, std::uint32_t> index_;
};

// Keeps a term iff min_df <= df and df <= max_df_ratio * |docs|. Throws
// input_error on an empty corpus.
Vocabulary build_vocabulary(std::span<const ProcessedDocument> docs, VocabularyOptions options = {});

struct TermCount {
  std::uint32_t term = 0;
  std::uint32_t count = 0;

  friend bool operator==(const TermCount&, const TermCount&) = default;
};

struct BowDocument {
  std::string doc_id;
  std::int64_t timestamp = 0;
  std::string source;
  std::vector<TermCount> counts;  // strictly increasing term, count > 0

  std::size_t length() const noexcept {
    std::size_t n = 0;
    for (const auto& tc : counts) n += tc.count;
    return n;
  }
  bool empty() const noexcept { return counts.empty(); }
};

BowDocument vectorize(const ProcessedDocument& doc, const Vocabulary& vocab);

}  // namespace excite
