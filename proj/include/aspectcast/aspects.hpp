#pragma once

// The 16 cloud aspects, keyword vocabularies, and phrase matching of reviews
// against them.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "aspectcast/corpus.hpp"
#include "aspectcast/error.hpp"
#include "aspectcast/text.hpp"

namespace aspectcast {

struct Aspect {
  std::string id;
  std::string name;
  std::string description;
};

/// The 16 aspects in table order. The first 13 are the quality drivers and
/// boundaries; the last three are the market-facing additions.
inline const std::vector<Aspect>& builtin_aspects() {
  static const std::vector<Aspect> aspects = {
      {"greater_scalability", "Greater scalability", "Flexible to either up-scale or down-scale"},
      {"faster_access", "Faster access to infrastructure",
       "Easy access to infrastructure without having to purchase them"},
      {"managing_multiple_services", "Managing multiple services",
       "Overheads and difficulty in managing multiple services"},
      {"security_concerns", "Security concerns", "Concerns over data breaches, privacy, access control, etc."},
      {"cost_savings", "Cost savings", "Cost saved by transfer to cloud infrastructure"},
      {"higher_availability", "Higher availability", "High availability of cloud services"},
      {"lack_of_control", "Lack of control",
       "Uncertainty of data location. Uncertainty regarding legal issues, and dispute resolution"},
      {"higher_performance", "Higher performance", "Higher performance of cloud compared to on-premise infrastructure"},
      {"lack_of_expertise", "Lack of expertise/resources",
       "Lack of specialised people or sufficient resources for managing cloud services"},
      {"it_staff_efficiency", "IT staff efficiency", "Increase of productivity"},
      {"provider_lock_in", "Provider lock-in", "Difficulties with changing cloud computing service provider"},
      {"business_continuity", "Business continuity", "Ability to continually operate even through disasters"},
      {"capex_to_opex", "Move from CapEx to OpEx", "Changing from capital expenditure to operating expense"},
      {"after_sales_experience", "After-sales experience", "Ability to provide acceptable customer services"},
      {"market_responsiveness", "Market responsiveness", "Ability to enhance the products' after sales"},
      {"marketing_execution", "Marketing execution", "Ability to deliver the product that the customer expected"},
  };
  return aspects;
}

inline bool is_known_aspect(std::string_view id) {
  const auto& all = builtin_aspects();
  return std::any_of(all.begin(), all.end(), [&](const Aspect& a) { return a.id == id; });
}

inline const Aspect& find_aspect(std::string_view id) {
  for (const auto& a : builtin_aspects()) {
    if (a.id == id) return a;
  }
  throw Error("unknown aspect id '" + std::string(id) + "'");
}

/// Ordered aspect ids for the 13- or 16-aspect configuration.
inline std::vector<std::string> aspect_set(int size) {
  if (size != 13 && size != 16) throw Error("aspect set must be 13 or 16, got " + std::to_string(size));
  std::vector<std::string> ids;
  for (int i = 0; i < size; ++i) ids.push_back(builtin_aspects()[static_cast<std::size_t>(i)].id);
  return ids;
}

/// Aspect id -> normalized phrases. Phrases are matched on token boundaries.
class AspectVocabulary {
 public:
  static constexpr std::size_t kMaxPhraseTokens = 5;

  /// Adds a phrase after normalization; rejects unknown aspects and phrases
  /// outside 1..5 tokens.
  void add(const std::string& aspect_id, std::string_view phrase) {
    if (!is_known_aspect(aspect_id)) throw Error("unknown aspect id '" + aspect_id + "'");
    auto normalized = text::normalize_phrase(phrase);
    auto tokens = text::tokenize(normalized);
    if (tokens.empty() || tokens.size() > kMaxPhraseTokens) {
      throw Error("phrase '" + std::string(phrase) + "' for aspect '" + aspect_id + "' must have 1.." +
                  std::to_string(kMaxPhraseTokens) + " tokens");
    }
    auto& entry = entries_[aspect_id];
    if (entry.phrases.insert(normalized).second) entry.tokenized.emplace_back(std::move(normalized), std::move(tokens));
  }

  bool contains(const std::string& aspect_id) const { return entries_.count(aspect_id) != 0; }

  const std::set<std::string>& phrases(const std::string& aspect_id) const {
    auto it = entries_.find(aspect_id);
    if (it == entries_.end()) throw Error("no vocabulary for aspect '" + aspect_id + "'");
    return it->second.phrases;
  }

  std::vector<std::string> aspect_ids() const {
    std::vector<std::string> ids;
    for (const auto& a : builtin_aspects()) {
      if (contains(a.id)) ids.push_back(a.id);
    }
    return ids;
  }

  struct Entry {
    std::set<std::string> phrases;
    std::vector<std::pair<std::string, std::vector<std::string>>> tokenized;
  };

  const std::map<std::string, Entry>& entries() const noexcept { return entries_; }

 private:
  std::map<std::string, Entry> entries_;
};

/// Loads `{"aspect_id": ["phrase", ...], ...}`.
inline AspectVocabulary load_vocabulary(std::string_view content) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(content);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("malformed vocabulary JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error("vocabulary must be a JSON object of aspect id -> phrase array");
  AspectVocabulary vocab;
  for (const auto& [key, value] : doc.items()) {
    if (key.starts_with('_')) continue;  // comment keys such as "_note"
    if (!is_known_aspect(key)) throw Error("unknown aspect id '" + key + "' in vocabulary");
    if (!value.is_array() || value.empty()) throw Error("empty phrase array for aspect '" + key + "'");
    for (const auto& phrase : value) {
      if (!phrase.is_string()) throw Error("non-string phrase for aspect '" + key + "'");
      vocab.add(key, phrase.get<std::string>());
    }
  }
  return vocab;
}

struct AspectMatch {
  std::string review_id;
  std::string aspect_id;
  std::set<std::string> matched_phrases;

  friend bool operator==(const AspectMatch&, const AspectMatch&) = default;
};

namespace detail {

inline bool contains_sequence(const std::vector<std::string>& haystack, const std::vector<std::string>& needle) {
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) != haystack.end();
}

}  // namespace detail

/// One match per aspect having at least one phrase present in the review.
/// Aspects come out in table order.
inline std::vector<AspectMatch> match_aspects(const Review& review, const AspectVocabulary& vocab) {
  const auto tokens = text::tokenize(review.text);
  std::vector<AspectMatch> matches;
  for (const auto& aspect : builtin_aspects()) {
    auto it = vocab.entries().find(aspect.id);
    if (it == vocab.entries().end()) continue;
    AspectMatch m{review.id, aspect.id, {}};
    for (const auto& [phrase, phrase_tokens] : it->second.tokenized) {
      if (detail::contains_sequence(tokens, phrase_tokens)) m.matched_phrases.insert(phrase);
    }
    if (!m.matched_phrases.empty()) matches.push_back(std::move(m));
  }
  return matches;
}

/// Small fixed English stop-word list used by term_frequencies.
inline const std::unordered_set<std::string>& default_stopwords() {
  static const std::unordered_set<std::string> words = {
      "a",    "about", "after", "all",   "also",  "am",    "an",    "and",   "any",   "are",   "as",
      "at",   "be",    "been",  "but",   "by",    "can",   "could", "did",   "do",    "does",  "for",
      "from", "had",   "has",   "have",  "he",    "her",   "his",   "how",   "i",     "if",    "in",
      "into", "is",    "it",    "its",   "just",  "me",    "more",  "most",  "my",    "no",    "not",
      "of",   "on",    "one",   "only",  "or",    "other", "our",   "out",   "over",  "s",     "she",
      "so",   "some",  "than",  "that",  "the",   "their", "them",  "then",  "there", "these", "they",
      "this", "those", "to",    "too",   "up",    "us",    "very",  "was",   "we",    "were",  "what",
      "when", "which", "while", "who",   "will",  "with",  "would", "you",   "your",  "t",     "ve",
  };
  return words;
}

/// Case-insensitive token counts, stop-words removed, sorted by descending
/// count then token, truncated to top_n.
inline std::vector<std::pair<std::string, std::size_t>> term_frequencies(
    const std::vector<Review>& reviews, std::size_t top_n,
    const std::unordered_set<std::string>& stopwords = default_stopwords()) {
  if (top_n == 0) throw Error("top_n must be at least 1");
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& r : reviews) {
    for (auto& tok : text::tokenize(r.text)) {
      if (!stopwords.count(tok)) ++counts[std::move(tok)];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (ranked.size() > top_n) ranked.resize(top_n);
  return ranked;
}

}  // namespace aspectcast
