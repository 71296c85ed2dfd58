#pragma once

// Lexicon and rule-based sentiment scoring (VADER-style heuristics).
//
// Each text is scored as one unit. Token valences come from the lexicon and
// are adjusted by capitalization, degree modifiers, negation and a contrastive
// "but"; '!' and '?' add emphasis to the summed valence. The compound score is
// s / sqrt(s^2 + alpha).

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "aspectcast/csv.hpp"
#include "aspectcast/error.hpp"
#include "aspectcast/text.hpp"

namespace aspectcast {

struct SentimentLexicon {
  static constexpr double kMinValence = -4.0;
  static constexpr double kMaxValence = 4.0;

  std::unordered_map<std::string, double> valences;

  void set(std::string_view token, double valence) {
    if (!(valence >= kMinValence && valence <= kMaxValence)) {
      throw Error("valence out of range for '" + std::string(token) + "'");
    }
    valences[text::to_lower(token)] = valence;
  }

  const double* find(const std::string& lower_token) const {
    auto it = valences.find(lower_token);
    return it == valences.end() ? nullptr : &it->second;
  }

  std::size_t size() const noexcept { return valences.size(); }
};

/// Tab-separated `token<TAB>valence[<TAB>...]`; later duplicates win.
inline SentimentLexicon load_lexicon(std::string_view content) {
  SentimentLexicon lex;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    auto line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (text::trim(line).empty()) continue;

    const auto tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0) throw ParseError(line_no, "expected token<TAB>valence");
    const auto token = line.substr(0, tab);
    auto rest = line.substr(tab + 1);
    const auto tab2 = rest.find('\t');
    const auto field = text::trim(rest.substr(0, tab2));
    const double valence = csv::parse_double(field, line_no, "valence");
    if (valence < SentimentLexicon::kMinValence || valence > SentimentLexicon::kMaxValence) {
      throw ParseError(line_no, "valence out of range: " + std::string(field));
    }
    lex.valences[text::to_lower(token)] = valence;
  }
  return lex;
}

/// Heuristic constants. Defaults are the reference VADER values.
struct HeuristicConfig {
  double exclamation_boost = 0.292;
  int exclamation_cap = 4;
  double question_boost = 0.18;  // per '?' when 2..question_cap marks
  int question_cap = 3;
  double question_max_boost = 0.96;  // more than question_cap marks
  double caps_boost = 0.733;
  double degree_increment = 0.293;
  std::vector<double> degree_decay = {1.0, 0.95, 0.90};  // by distance to the sentiment token
  double negation_factor = -0.74;
  double but_before = 0.5;
  double but_after = 1.5;
  int negation_window = 3;
  double alpha = 15.0;

  void validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!(alpha > 0.0) || !finite(alpha)) throw Error("heuristic alpha must be > 0");
    if (negation_window < 1) throw Error("negation window must be >= 1");
    if (exclamation_cap < 0 || question_cap < 1) throw Error("punctuation caps must be non-negative");
    for (double v : {exclamation_boost, question_boost, question_max_boost, caps_boost, degree_increment,
                     negation_factor, but_before, but_after}) {
      if (!finite(v)) throw Error("heuristic boosts must be finite");
    }
    if (degree_decay.empty()) throw Error("degree_decay must not be empty");
    for (double v : degree_decay) {
      if (!finite(v)) throw Error("heuristic boosts must be finite");
    }
  }
};

/// Overrides fields of `base` from a JSON object; unknown keys are rejected.
inline HeuristicConfig heuristics_from_json(const nlohmann::json& j, HeuristicConfig base = {}) {
  if (!j.is_object()) throw Error("heuristic config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "exclamation_boost") base.exclamation_boost = value.get<double>();
      else if (key == "exclamation_cap") base.exclamation_cap = value.get<int>();
      else if (key == "question_boost") base.question_boost = value.get<double>();
      else if (key == "question_cap") base.question_cap = value.get<int>();
      else if (key == "question_max_boost") base.question_max_boost = value.get<double>();
      else if (key == "caps_boost") base.caps_boost = value.get<double>();
      else if (key == "degree_increment") base.degree_increment = value.get<double>();
      else if (key == "degree_decay") base.degree_decay = value.get<std::vector<double>>();
      else if (key == "negation_factor") base.negation_factor = value.get<double>();
      else if (key == "but_before") base.but_before = value.get<double>();
      else if (key == "but_after") base.but_after = value.get<double>();
      else if (key == "negation_window") base.negation_window = value.get<int>();
      else if (key == "alpha") base.alpha = value.get<double>();
      else throw Error("unknown heuristic config field '" + key + "'");
    } catch (const nlohmann::json::exception&) {
      throw Error("heuristic config field '" + key + "' has the wrong type");
    }
  }
  base.validate();
  return base;
}

struct SentimentScores {
  double positive = 0.0;
  double neutral = 0.0;
  double negative = 0.0;
  double compound = 0.0;
};

/// s / sqrt(s^2 + alpha).
inline double normalize_compound(double s, double alpha) { return s / std::sqrt(s * s + alpha); }

namespace detail {

inline const std::unordered_map<std::string, int>& degree_modifiers() {
  // +1 booster, -1 dampener
  static const std::unordered_map<std::string, int> words = {
      {"absolutely", 1},   {"amazingly", 1},     {"awfully", 1},      {"completely", 1},   {"considerable", 1},
      {"considerably", 1}, {"decidedly", 1},     {"deeply", 1},       {"effing", 1},       {"enormous", 1},
      {"enormously", 1},   {"entirely", 1},      {"especially", 1},   {"exceptional", 1},  {"exceptionally", 1},
      {"extreme", 1},      {"extremely", 1},     {"fabulously", 1},   {"flipping", 1},     {"flippin", 1},
      {"frackin", 1},      {"fracking", 1},      {"fricking", 1},     {"frickin", 1},      {"frigging", 1},
      {"friggin", 1},      {"fully", 1},         {"fuckin", 1},       {"fucking", 1},      {"fuggin", 1},
      {"fugging", 1},      {"greatly", 1},       {"hella", 1},        {"highly", 1},       {"hugely", 1},
      {"incredible", 1},   {"incredibly", 1},    {"intensely", 1},    {"major", 1},        {"majorly", 1},
      {"more", 1},         {"most", 1},          {"particularly", 1}, {"purely", 1},       {"quite", 1},
      {"really", 1},       {"remarkably", 1},    {"so", 1},           {"substantially", 1}, {"thoroughly", 1},
      {"total", 1},        {"totally", 1},       {"tremendous", 1},   {"tremendously", 1}, {"uber", 1},
      {"unbelievably", 1}, {"unusually", 1},     {"utter", 1},        {"utterly", 1},      {"very", 1},
      {"almost", -1},      {"barely", -1},       {"hardly", -1},      {"kinda", -1},       {"kindof", -1},
      {"less", -1},        {"little", -1},       {"marginal", -1},    {"marginally", -1},  {"occasional", -1},
      {"occasionally", -1}, {"partly", -1},      {"scarce", -1},      {"scarcely", -1},    {"slight", -1},
      {"slightly", -1},    {"somewhat", -1},     {"sorta", -1},       {"sortof", -1},
  };
  return words;
}

inline const std::unordered_set<std::string>& negation_words() {
  static const std::unordered_set<std::string> words = {
      "aint",     "arent",    "cannot",   "cant",     "couldnt",  "darent",   "didnt",   "doesnt",  "ain't",
      "aren't",   "can't",    "couldn't", "daren't",  "didn't",   "doesn't",  "dont",    "hadnt",   "hasnt",
      "havent",   "isnt",     "mightnt",  "mustnt",   "neither",  "don't",    "hadn't",  "hasn't",  "haven't",
      "isn't",    "mightn't", "mustn't",  "neednt",   "needn't",  "never",    "none",    "nope",    "nor",
      "not",      "nothing",  "nowhere",  "oughtnt",  "shant",    "shouldnt", "uhuh",    "wasnt",   "werent",
      "oughtn't", "shan't",   "shouldn't", "uh-uh",   "wasn't",   "weren't",  "without", "wont",    "wouldnt",
      "won't",    "wouldn't", "rarely",   "seldom",   "despite",  "no",
  };
  return words;
}

inline bool is_negation(const std::string& lower) {
  return negation_words().count(lower) != 0 || lower.find("n't") != std::string::npos;
}

// At least one letter and no lowercase letters.
inline bool is_all_caps(std::string_view tok) {
  bool has_alpha = false;
  for (char c : tok) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalpha(u)) {
      has_alpha = true;
      if (std::islower(u)) return false;
    }
  }
  return has_alpha;
}

// Whitespace split with leading/trailing ASCII punctuation stripped; tokens
// that are pure punctuation disappear.
inline std::vector<std::string> sentiment_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    auto tok = s.substr(i, j - i);
    while (!tok.empty() && std::ispunct(static_cast<unsigned char>(tok.front()))) tok.remove_prefix(1);
    while (!tok.empty() && std::ispunct(static_cast<unsigned char>(tok.back()))) tok.remove_suffix(1);
    if (!tok.empty()) out.emplace_back(tok);
    i = j;
  }
  return out;
}

inline double punctuation_emphasis(std::string_view s, const HeuristicConfig& cfg) {
  const auto bangs = static_cast<int>(std::count(s.begin(), s.end(), '!'));
  const auto questions = static_cast<int>(std::count(s.begin(), s.end(), '?'));
  double emphasis = std::min(bangs, cfg.exclamation_cap) * cfg.exclamation_boost;
  if (questions > 1) {
    emphasis += questions <= cfg.question_cap ? questions * cfg.question_boost : cfg.question_max_boost;
  }
  return emphasis;
}

}  // namespace detail

/// Per-token adjusted valences before punctuation emphasis; exposed for tests.
inline std::vector<double> token_valences(const std::vector<std::string>& tokens, const SentimentLexicon& lexicon,
                                          const HeuristicConfig& cfg) {
  std::vector<std::string> lower;
  lower.reserve(tokens.size());
  std::size_t caps = 0;
  for (const auto& t : tokens) {
    lower.push_back(text::to_lower(t));
    if (detail::is_all_caps(t)) ++caps;
  }
  // Caps emphasis only applies when the text mixes all-caps and other tokens.
  const bool cap_differential = caps > 0 && caps < tokens.size();

  const auto& modifiers = detail::degree_modifiers();
  std::vector<double> valences(tokens.size(), 0.0);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (modifiers.count(lower[i])) continue;
    if (lower[i] == "kind" && i + 1 < tokens.size() && lower[i + 1] == "of") continue;  // hedge, not praise
    const double* base = lexicon.find(lower[i]);
    if (!base) continue;
    // "no" directly before another sentiment word acts only as a negator.
    if (lower[i] == "no" && i + 1 < tokens.size() && lexicon.find(lower[i + 1])) continue;
    double v = *base;
    if (cap_differential && detail::is_all_caps(tokens[i])) v += v > 0.0 ? cfg.caps_boost : -cfg.caps_boost;

    const auto window = static_cast<std::size_t>(cfg.negation_window);
    for (std::size_t k = 1; k <= window && k <= i; ++k) {
      const auto& prev = lower[i - k];
      if (detail::is_negation(prev)) {
        v *= cfg.negation_factor;
        continue;
      }
      if (lexicon.find(prev)) continue;
      if (auto it = modifiers.find(prev); it != modifiers.end()) {
        double scalar = it->second * cfg.degree_increment;
        if (v < 0.0) scalar = -scalar;
        if (cap_differential && detail::is_all_caps(tokens[i - k])) scalar += v > 0.0 ? cfg.caps_boost : -cfg.caps_boost;
        const auto decay_idx = std::min(k - 1, cfg.degree_decay.size() - 1);
        v += scalar * cfg.degree_decay[decay_idx];
      }
    }
    valences[i] = v;
  }

  if (auto it = std::find(lower.begin(), lower.end(), "but"); it != lower.end()) {
    const auto pivot = static_cast<std::size_t>(it - lower.begin());
    for (std::size_t i = 0; i < valences.size(); ++i) {
      if (i < pivot) valences[i] *= cfg.but_before;
      else if (i > pivot) valences[i] *= cfg.but_after;
    }
  }
  return valences;
}

/// Scores one text. Unknown tokens are neutral.
inline SentimentScores analyze(std::string_view input, const SentimentLexicon& lexicon,
                               const HeuristicConfig& cfg = {}) {
  const auto tokens = detail::sentiment_tokens(input);
  if (tokens.empty()) return {};

  const auto valences = token_valences(tokens, lexicon, cfg);
  const double emphasis = detail::punctuation_emphasis(input, cfg);

  double sum = 0.0;
  double pos = 0.0;
  double neg = 0.0;
  double neu = 0.0;
  for (double v : valences) {
    sum += v;
    if (v > 0.0) pos += v + 1.0;
    else if (v < 0.0) neg += v - 1.0;
    else neu += 1.0;
  }
  if (sum > 0.0) sum += emphasis;
  else if (sum < 0.0) sum -= emphasis;

  if (pos > std::fabs(neg)) pos += emphasis;
  else if (pos < std::fabs(neg)) neg -= emphasis;

  SentimentScores out;
  const double total = pos + std::fabs(neg) + neu;
  out.positive = pos / total;
  out.negative = std::fabs(neg) / total;
  out.neutral = neu / total;
  out.compound = normalize_compound(sum, cfg.alpha);
  return out;
}

}  // namespace aspectcast
