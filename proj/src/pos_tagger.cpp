#include <fstream>
#include <sstream>

#include "embedded_data.hpp"
#include "excite/corpus.hpp"
#include "excite/error.hpp"

namespace excite {
namespace {

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

const HeuristicTagger& HeuristicTagger::bundled() {
  static const HeuristicTagger tagger = from_rules(embedded::pos_rules);
  return tagger;
}

HeuristicTagger HeuristicTagger::from_rules(std::string_view text) {
  HeuristicTagger tagger;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string kind, value, extra;
    if (!(fields >> kind)) continue;
    if (!(fields >> value) || (fields >> extra))
      throw input_error("tagger rules line " + std::to_string(line_no) + ": expected '<kind> <value>'");
    if (kind == "closed") {
      tagger.closed_.insert(value);
    } else if (kind == "verb") {
      tagger.verbs_.insert(value);
    } else if (kind == "adjective") {
      tagger.adjectives_.insert(value);
    } else if (kind == "adverb_suffix") {
      tagger.adverb_suffixes_.push_back(value);
    } else if (kind == "adjective_suffix") {
      tagger.adjective_suffixes_.push_back(value);
    } else {
      throw input_error("tagger rules line " + std::to_string(line_no) + ": unknown kind '" + kind + "'");
    }
  }
  return tagger;
}

HeuristicTagger HeuristicTagger::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_rules(ss.str());
}

bool HeuristicTagger::is_verb_form(std::string_view token) const {
  auto known = [&](std::string_view stem) { return !stem.empty() && verbs_.contains(std::string(stem)); };
  if (known(token)) return true;
  for (std::string_view suffix : {"ing", "ed", "s"}) {
    if (!ends_with(token, suffix)) continue;
    const auto stem = token.substr(0, token.size() - suffix.size());
    if (stem.size() < 2) continue;
    if (known(stem)) return true;
    if (suffix != "s" && known(std::string(stem) + "e")) return true;  // making, used
    if (suffix != "s" && stem.size() >= 3 && stem[stem.size() - 1] == stem[stem.size() - 2] &&
        known(stem.substr(0, stem.size() - 1)))
      return true;  // getting, stopped
  }
  return false;
}

PosTag HeuristicTagger::tag(std::string_view token) const {
  const std::string word(token);
  if (closed_.contains(word)) return PosTag::closed;
  if (adjectives_.contains(word)) return PosTag::adjective;
  if (is_verb_form(token)) return PosTag::verb;
  for (const auto& s : adverb_suffixes_)
    if (token.size() > s.size() + 1 && ends_with(token, s)) return PosTag::adverb;
  for (const auto& s : adjective_suffixes_)
    if (token.size() > s.size() + 1 && ends_with(token, s)) return PosTag::adjective;
  return PosTag::noun;
}

}  // namespace excite
