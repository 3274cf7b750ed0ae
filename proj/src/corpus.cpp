#include "excite/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "embedded_data.hpp"
#include "excite/error.hpp"

namespace excite {
namespace {

// Decodes one UTF-8 code point starting at text[i]; malformed bytes decode
// as themselves so no input is ever rejected.
char32_t decode(std::string_view text, std::size_t i, std::size_t& length) {
  const auto b0 = static_cast<unsigned char>(text[i]);
  auto cont = [&](std::size_t k) -> int {
    if (i + k >= text.size()) return -1;
    const auto b = static_cast<unsigned char>(text[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    length = 1;
    return b0;
  }
  if ((b0 & 0xE0) == 0xC0) {
    const int c1 = cont(1);
    if (c1 >= 0) {
      length = 2;
      return (char32_t(b0 & 0x1F) << 6) | char32_t(c1);
    }
  } else if ((b0 & 0xF0) == 0xE0) {
    const int c1 = cont(1), c2 = cont(2);
    if (c1 >= 0 && c2 >= 0) {
      length = 3;
      return (char32_t(b0 & 0x0F) << 12) | (char32_t(c1) << 6) | char32_t(c2);
    }
  } else if ((b0 & 0xF8) == 0xF0) {
    const int c1 = cont(1), c2 = cont(2), c3 = cont(3);
    if (c1 >= 0 && c2 >= 0 && c3 >= 0) {
      length = 4;
      return (char32_t(b0 & 0x07) << 18) | (char32_t(c1) << 12) | (char32_t(c2) << 6) | char32_t(c3);
    }
  }
  length = 1;
  return b0;
}

bool is_word_char(char32_t c) {
  if (c < 0x80) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
  }
  // Latin-1 punctuation and symbols, general punctuation, currency and
  // arrows through dingbats, CJK punctuation, emoji and pictographs.
  if (c <= 0xBF) return false;
  if (c == 0xD7 || c == 0xF7) return false;
  if (c >= 0x2000 && c <= 0x2BFF) return false;
  if (c >= 0x3000 && c <= 0x303F) return false;
  if (c >= 0xFE00 && c <= 0xFE0F) return false;
  if (c >= 0x1F000) return false;
  return true;
}

std::string lower_ascii(std::string_view text) {
  std::string out(text);
  for (auto& ch : out) {
    if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
  }
  return out;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

void strip_urls(std::string& text) {
  static constexpr std::string_view prefixes[] = {"http://", "https://", "www."};
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t hit = std::string::npos;
    for (auto p : prefixes) hit = std::min(hit, text.find(p, pos));
    if (hit == std::string::npos) break;
    std::size_t end = hit;
    while (end < text.size() && !is_space(text[end])) ++end;
    text.replace(hit, end - hit, " ");
    pos = hit + 1;
  }
}

struct CodePoint {
  char32_t value;
  std::string_view bytes;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<std::string> tokenize(std::string_view raw) {
  std::string text = lower_ascii(raw);
  strip_urls(text);

  std::vector<CodePoint> cps;
  cps.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    std::size_t len = 1;
    const char32_t c = decode(text, i, len);
    cps.push_back({c, std::string_view(text).substr(i, len)});
    i += len;
  }

  std::vector<std::string> tokens;
  std::string current;
  std::size_t current_chars = 0;
  auto flush = [&] {
    if (current_chars >= 2) tokens.push_back(current);
    current.clear();
    current_chars = 0;
  };
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const char32_t c = cps[i].value;
    if (is_word_char(c)) {
      current.append(cps[i].bytes);
      ++current_chars;
    } else if ((c == U'\'' || c == 0x2019) && current_chars > 0 && i + 1 < cps.size() &&
               is_word_char(cps[i + 1].value)) {
      current.push_back('\'');
      ++current_chars;
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

Stoplist parse_word_list(std::string_view text) {
  Stoplist words;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    words.insert(lower_ascii(line.substr(first, last - first + 1)));
  }
  return words;
}

Stoplist load_stoplist(const std::filesystem::path& path) { return parse_word_list(read_file(path)); }

const Stoplist& default_stoplist() {
  static const Stoplist list = parse_word_list(embedded::stopwords_en);
  return list;
}

std::vector<std::string> remove_stopwords(std::span<const std::string> tokens, const Stoplist& stoplist) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens)
    if (!stoplist.contains(t)) out.push_back(t);
  return out;
}

std::vector<std::string> filter_pos(std::span<const std::string> tokens, const PosTagger& tagger) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    const auto tag = tagger.tag(t);
    if (tag == PosTag::noun || tag == PosTag::adjective) out.push_back(t);
  }
  return out;
}

ProcessedDocument preprocess(const RawSubmission& submission, const Stoplist& stoplist, const PosTagger& tagger) {
  const auto tokens = tokenize(submission.text);
  const auto kept = remove_stopwords(tokens, stoplist);
  return {submission.id, submission.created_utc, submission.source, filter_pos(kept, tagger)};
}

Vocabulary::Vocabulary(std::vector<std::string> terms, std::vector<std::size_t> doc_frequency,
                       std::size_t corpus_size)
    : terms_(std::move(terms)), doc_frequency_(std::move(doc_frequency)), corpus_size_(corpus_size) {
  if (terms_.size() != doc_frequency_.size()) throw input_error("vocabulary term/frequency size mismatch");
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (i > 0 && !(terms_[i - 1] < terms_[i])) throw input_error("vocabulary terms must be sorted and unique");
    index_.emplace(terms_[i], static_cast<std::uint32_t>(i));
  }
}

std::optional<std::uint32_t> Vocabulary::index_of(const std::string& term) const {
  auto it = index_.find(term);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Vocabulary build_vocabulary(std::span<const ProcessedDocument> docs, VocabularyOptions options) {
  if (docs.empty()) throw input_error("cannot build a vocabulary from an empty corpus");
  if (options.max_df_ratio <= 0.0 || options.max_df_ratio > 1.0)
    throw config_error("max_df_ratio must be in (0, 1]");

  std::map<std::string, std::size_t> df;
  std::unordered_set<std::string_view> seen;
  for (const auto& doc : docs) {
    seen.clear();
    for (const auto& t : doc.tokens)
      if (seen.insert(t).second) ++df[t];
  }

  // df <= ratio * N, evaluated exactly on integers where the ratio allows.
  const double cap = options.max_df_ratio * static_cast<double>(docs.size());
  std::vector<std::string> terms;
  std::vector<std::size_t> freqs;
  for (const auto& [term, count] : df) {
    if (count < options.min_df) continue;
    if (static_cast<double>(count) > cap * (1.0 + 1e-12)) continue;
    terms.push_back(term);
    freqs.push_back(count);
  }
  return Vocabulary(std::move(terms), std::move(freqs), docs.size());
}

BowDocument vectorize(const ProcessedDocument& doc, const Vocabulary& vocab) {
  std::map<std::uint32_t, std::uint32_t> counts;
  for (const auto& t : doc.tokens)
    if (auto idx = vocab.index_of(t)) ++counts[*idx];
  BowDocument bow{doc.id, doc.timestamp, doc.source, {}};
  bow.counts.reserve(counts.size());
  for (const auto& [term, count] : counts) bow.counts.push_back({term, count});
  return bow;
}

}  // namespace excite
