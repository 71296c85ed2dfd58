#pragma once

// Config-driven stages behind the command-line tool. Each stage writes its
// results into the output directory; fit, predict and evaluate read the files
// written by the stage before them.
//
//   ingest     reviews.jsonl, growth.csv, terms.csv
//   sentiment  sentiment.csv
//   features   matches.csv, perceptions.csv, features.csv
//   fit        models/<label>.json, grid_search.csv
//   predict    predictions.csv
//   evaluate   report.csv, report.json, plot_data.csv

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aspectcast/aspects.hpp"
#include "aspectcast/corpus.hpp"
#include "aspectcast/csv.hpp"
#include "aspectcast/error.hpp"
#include "aspectcast/evaluation.hpp"
#include "aspectcast/features.hpp"
#include "aspectcast/models/forecaster.hpp"
#include "aspectcast/sentiment.hpp"
#include "aspectcast/text.hpp"

namespace aspectcast::pipeline {

namespace fs = std::filesystem;

struct ModelConfig {
  std::string label;
  ForecasterSpec spec;
  std::vector<std::string> aspects;  // empty: the config aspect set
  bool use_lag = true;
  std::vector<double> gamma_grid;          // svr only
  std::vector<ArimaOrder> orders_grid;     // arima only
};

struct Config {
  fs::path reviews;
  fs::path revenue;
  fs::path vocabulary;
  fs::path lexicon;
  std::optional<fs::path> heuristics;
  std::optional<fs::path> sentiment_scores;  // id,compound overrides for the features stage
  std::vector<std::string> aspects = aspect_set(16);
  bool include_lag = true;
  SplitRatio split;
  TheilOptions theil;
  std::size_t top_terms = 25;
  std::vector<ModelConfig> models;
  fs::path out;
};

struct Overrides {
  std::optional<fs::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> aspects;
  bool no_lag = false;
};

using Log = std::function<void(const std::string&)>;

inline void stderr_log(const std::string& line) { std::cerr << "aspectcast: " << line << '\n'; }

namespace detail {

using aspectcast::detail::get_or;
using aspectcast::detail::quarter_at;
using aspectcast::detail::reject_unknown_keys;
using aspectcast::detail::require;

inline std::vector<std::string> aspects_from_json(const nlohmann::json& j, const std::string& where) {
  if (j.is_number_integer()) {
    const int n = j.get<int>();
    if (n != 13 && n != 16) throw Error(where + ": aspect set must be 13, 16 or a list of ids");
    return aspect_set(n);
  }
  if (!j.is_array() || j.empty()) throw Error(where + ": aspect set must be 13, 16 or a non-empty list of ids");
  std::set<std::string> wanted;
  for (const auto& id : j) {
    if (!id.is_string()) throw Error(where + ": aspect ids must be strings");
    const auto s = id.get<std::string>();
    if (!is_known_aspect(s)) throw Error(where + ": unknown aspect id '" + s + "'");
    if (!wanted.insert(s).second) throw Error(where + ": duplicate aspect id '" + s + "'");
  }
  std::vector<std::string> out;
  for (const auto& a : builtin_aspects()) {
    if (wanted.count(a.id)) out.push_back(a.id);
  }
  return out;
}

inline bool valid_label(const std::string& s) {
  if (s.empty() || s.front() == '.') return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return text::is_ascii_alnum(c) || c == '-' || c == '_' || c == '.';
  });
}

inline std::string read_input(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw Error("cannot open file '" + p.string() + "'");
  return text::read_file(p.string());
}

/// Runs `body`, prefixing any error with the file it concerns.
template <class F>
auto with_file(const fs::path& p, F&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    const std::string what = e.what();
    if (what.find(p.string()) != std::string::npos) throw;
    throw Error(p.string() + ": " + what);
  }
}

template <class F>
auto in_stage(const std::string& stage, F&& body) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

inline void write_output(const fs::path& p, std::string_view content) {
  fs::create_directories(p.parent_path());
  text::write_file(p.string(), content);
}

}  // namespace detail

/// Parses a config; relative paths resolve against the config's directory.
inline Config parse_config(const nlohmann::json& j, const fs::path& base_dir) {
  using detail::require;
  detail::reject_unknown_keys(j,
                              {"reviews", "revenue", "vocabulary", "lexicon", "heuristics", "sentiment_scores",
                               "aspects", "include_lag", "split", "theil", "top_terms", "models", "out"},
                              "config");
  auto path_of = [&](const char* key) { return base_dir / require<std::string>(j, key, "config"); };
  Config c;
  c.reviews = path_of("reviews");
  c.revenue = path_of("revenue");
  c.vocabulary = path_of("vocabulary");
  c.lexicon = path_of("lexicon");
  if (j.contains("heuristics")) c.heuristics = path_of("heuristics");
  if (j.contains("sentiment_scores")) c.sentiment_scores = path_of("sentiment_scores");
  c.out = base_dir / detail::get_or<std::string>(j, "out", "out");
  if (j.contains("aspects")) c.aspects = detail::aspects_from_json(j.at("aspects"), "config");
  c.include_lag = detail::get_or<bool>(j, "include_lag", true);
  if (j.contains("split")) {
    const auto& s = j.at("split");
    detail::reject_unknown_keys(s, {"train", "test"}, "split");
    c.split.train = detail::get_or<double>(s, "train", c.split.train);
    c.split.test = detail::get_or<double>(s, "test", c.split.test);
    if (!(c.split.train > 0.0) || !(c.split.test > 0.0)) throw Error("split parts must be positive");
  }
  if (j.contains("theil")) {
    const auto& t = j.at("theil");
    detail::reject_unknown_keys(t, {"variant", "history"}, "theil");
    c.theil.variant = theil_variant_from_string(detail::get_or<std::string>(t, "variant", "U2"));
    c.theil.use_history = detail::get_or<bool>(t, "history", true);
  }
  const auto top = detail::get_or<long>(j, "top_terms", 25);
  if (top < 1) throw Error("top_terms must be >= 1");
  c.top_terms = static_cast<std::size_t>(top);

  std::set<std::string> labels;
  for (const auto& m : j.value("models", nlohmann::json::array())) {
    detail::reject_unknown_keys(
        m, {"label", "kind", "hyperparameters", "seed", "aspects", "use_lag", "gamma_grid", "orders_grid"}, "model");
    ModelConfig mc;
    mc.label = require<std::string>(m, "label", "model");
    if (!detail::valid_label(mc.label)) throw Error("model label '" + mc.label + "' must use only [A-Za-z0-9._-]");
    if (!labels.insert(mc.label).second) throw Error("duplicate model label '" + mc.label + "'");
    const std::string where = "model '" + mc.label + "'";
    try {
      mc.spec = spec_from_json(m);
    } catch (const std::exception& e) {
      throw Error(where + ": " + e.what());
    }
    if (m.contains("aspects")) mc.aspects = detail::aspects_from_json(m.at("aspects"), where);
    mc.use_lag = detail::get_or<bool>(m, "use_lag", true);
    if (m.contains("gamma_grid")) {
      if (mc.spec.kind() != "svr") throw Error(where + ": gamma_grid applies to svr models only");
      mc.gamma_grid = require<std::vector<double>>(m, "gamma_grid", where);
      for (double g : mc.gamma_grid) {
        if (!(g > 0.0)) throw Error(where + ": gamma_grid values must be positive");
      }
    }
    if (m.contains("orders_grid")) {
      if (mc.spec.kind() != "arima") throw Error(where + ": orders_grid applies to arima models only");
      for (const auto& o : m.at("orders_grid")) {
        const auto v = o.get<std::vector<int>>();
        if (v.size() != 3 || v[0] < 0 || v[1] < 0 || v[2] < 0) {
          throw Error(where + ": orders_grid entries must be [p, d, q] with non-negative integers");
        }
        mc.orders_grid.push_back({v[0], v[1], v[2]});
      }
    }
    c.models.push_back(std::move(mc));
  }
  return c;
}

inline Config load_config(const fs::path& path) {
  return detail::with_file(path, [&] {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(detail::read_input(path));
    } catch (const nlohmann::json::exception& e) {
      throw Error(std::string("malformed config JSON: ") + e.what());
    }
    return parse_config(j, path.parent_path());
  });
}

/// Flags win over config fields. --aspects replaces the aspect set of the
/// config and of every model.
inline void apply(Config& c, const Overrides& o) {
  if (o.out) c.out = *o.out;
  if (o.seed) {
    for (auto& m : c.models) m.spec.seed = *o.seed;
  }
  if (o.aspects) {
    if (*o.aspects != 13 && *o.aspects != 16) throw Error("--aspects must be 13 or 16");
    c.aspects = aspect_set(*o.aspects);
    for (auto& m : c.models) m.aspects.clear();
  }
  if (o.no_lag) c.include_lag = false;
}

// ---- stage helpers -------------------------------------------------------

inline std::vector<Review> load_reviews(const Config& c) {
  return detail::with_file(c.reviews, [&] {
    return parse_reviews(detail::read_input(c.reviews), review_format_from_path(c.reviews.string()));
  });
}

inline RevenueSeries load_revenue(const Config& c) {
  return detail::with_file(c.revenue, [&] { return parse_revenue(detail::read_input(c.revenue)); });
}

inline SentimentLexicon load_lexicon_file(const Config& c) {
  return detail::with_file(c.lexicon, [&] { return load_lexicon(detail::read_input(c.lexicon)); });
}

inline HeuristicConfig load_heuristics(const Config& c) {
  if (!c.heuristics) return {};
  return detail::with_file(*c.heuristics, [&] {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(detail::read_input(*c.heuristics));
    } catch (const nlohmann::json::exception& e) {
      throw Error(std::string("malformed heuristics JSON: ") + e.what());
    }
    return heuristics_from_json(j);
  });
}

/// Review id -> compound from a CSV with `id` and `compound` columns.
inline std::map<std::string, double> load_compounds(const fs::path& p) {
  return detail::with_file(p, [&] {
    const auto records = csv::parse(detail::read_input(p));
    if (records.empty()) throw ParseError(1, "empty sentiment scores file");
    const auto& h = records.front().fields;
    const auto id_col = std::find(h.begin(), h.end(), "id") - h.begin();
    const auto c_col = std::find(h.begin(), h.end(), "compound") - h.begin();
    if (static_cast<std::size_t>(id_col) == h.size() || static_cast<std::size_t>(c_col) == h.size()) {
      throw ParseError(records.front().line, "sentiment scores header needs 'id' and 'compound' columns");
    }
    std::map<std::string, double> out;
    for (std::size_t i = 1; i < records.size(); ++i) {
      const auto& r = records[i];
      if (r.fields.size() != h.size()) throw ParseError(r.line, "wrong number of fields");
      const double v = csv::parse_double(r.fields[static_cast<std::size_t>(c_col)], r.line, "compound");
      if (v < -1.0 || v > 1.0) throw ParseError(r.line, "compound outside [-1, 1]");
      if (!out.emplace(r.fields[static_cast<std::size_t>(id_col)], v).second) {
        throw ParseError(r.line, "duplicate id '" + r.fields[static_cast<std::size_t>(id_col)] + "'");
      }
    }
    return out;
  });
}

inline fs::path features_path(const Config& c) { return c.out / "features.csv"; }
inline fs::path model_path(const Config& c, const std::string& label) { return c.out / "models" / (label + ".json"); }
inline fs::path predictions_path(const Config& c) { return c.out / "predictions.csv"; }

inline FeatureMatrix load_features(const Config& c) {
  const auto p = features_path(c);
  if (!fs::exists(p)) throw Error("'" + p.string() + "' not found; run the features stage first");
  return detail::with_file(p, [&] { return read_feature_csv(detail::read_input(p)); });
}

/// The columns a model uses from the feature matrix.
inline std::vector<std::string> model_columns(const Config& c, const ModelConfig& m, const FeatureMatrix& fm) {
  if (m.spec.kind() == "arima") return {};
  std::vector<std::string> cols = m.aspects.empty() ? c.aspects : m.aspects;
  for (const auto& a : cols) {
    if (!fm.column_index(a)) {
      throw Error("model '" + m.label + "' uses aspect '" + a + "' missing from the feature matrix");
    }
  }
  if (m.use_lag && fm.has_lag()) cols.emplace_back(kLaggedGrowthColumn);
  return cols;
}

// ---- stages --------------------------------------------------------------

inline void run_ingest(const Config& c, const Log& log = stderr_log) {
  detail::in_stage("ingest", [&] {
    const auto reviews = load_reviews(c);
    const auto revenue = load_revenue(c);
    const auto growth = revenue_growth(revenue);
    detail::write_output(c.out / "reviews.jsonl", serialize_reviews(reviews, ReviewFormat::jsonl));

    std::string g = csv::join_row({"quarter", "revenue", "growth"});
    const auto& pts = revenue.points();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto gv = growth.at(pts[i].first);
      g += csv::join_row({pts[i].first.str(), csv::format_exact(pts[i].second), gv ? csv::format_exact(*gv) : ""});
    }
    detail::write_output(c.out / "growth.csv", g);

    std::string t = csv::join_row({"term", "count"});
    if (!reviews.empty()) {
      for (const auto& [term, n] : term_frequencies(reviews, c.top_terms)) t += csv::join_row({term, std::to_string(n)});
    }
    detail::write_output(c.out / "terms.csv", t);
    log("ingest: " + std::to_string(reviews.size()) + " reviews, " + std::to_string(revenue.size()) +
        " revenue quarters");
  });
}

/// `id,quarter,pos,neu,neg,compound` in input order.
inline std::string sentiment_csv(const std::vector<Review>& reviews, const SentimentLexicon& lex,
                                 const HeuristicConfig& cfg) {
  std::string out = csv::join_row({"id", "quarter", "pos", "neu", "neg", "compound"});
  for (const auto& r : reviews) {
    const auto s = analyze(r.text, lex, cfg);
    out += csv::join_row({r.id, r.quarter.str(), csv::format_fixed(s.positive, 4), csv::format_fixed(s.neutral, 4),
                          csv::format_fixed(s.negative, 4), csv::format_fixed(s.compound, 4)});
  }
  return out;
}

inline void run_sentiment(const Config& c, const Log& log = stderr_log) {
  detail::in_stage("sentiment", [&] {
    const auto reviews = load_reviews(c);
    const auto lex = load_lexicon_file(c);
    const auto cfg = load_heuristics(c);
    detail::write_output(c.out / "sentiment.csv", sentiment_csv(reviews, lex, cfg));
    log("sentiment: scored " + std::to_string(reviews.size()) + " reviews");
  });
}

inline FeatureMatrix build_features(const Config& c, const Log& log = stderr_log) {
  return detail::in_stage("features", [&] {
    const auto reviews = load_reviews(c);
    const auto growth = revenue_growth(load_revenue(c));
    const auto vocab = detail::with_file(c.vocabulary, [&] { return load_vocabulary(detail::read_input(c.vocabulary)); });

    std::map<std::string, double> compounds;
    if (c.sentiment_scores) {
      compounds = load_compounds(*c.sentiment_scores);
    } else {
      const auto lex = load_lexicon_file(c);
      const auto cfg = load_heuristics(c);
      for (const auto& r : reviews) compounds[r.id] = analyze(r.text, lex, cfg).compound;
    }

    std::map<std::pair<std::string, Quarter>, std::vector<double>> cells;
    std::string matches = csv::join_row({"review_id", "quarter", "aspect_id", "phrases"});
    std::size_t matched = 0;
    for (const auto& r : reviews) {
      const auto found = match_aspects(r, vocab);
      if (found.empty()) continue;
      auto it = compounds.find(r.id);
      if (it == compounds.end()) throw Error("no sentiment score for review '" + r.id + "'");
      ++matched;
      for (const auto& m : found) {
        cells[{m.aspect_id, r.quarter}].push_back(it->second);
        matches += csv::join_row({r.id, r.quarter.str(), m.aspect_id,
                                  text::join({m.matched_phrases.begin(), m.matched_phrases.end()}, ";")});
      }
    }

    std::vector<PerceptionRecord> records;
    std::string perc = csv::join_row({"aspect_id", "quarter", "review_count", "compound_sum", "perception"});
    for (const auto& a : builtin_aspects()) {
      for (const auto& [key, values] : cells) {
        if (key.first != a.id) continue;
        const auto rec = perception(key.first, key.second, values);
        perc += csv::join_row({rec.aspect_id, rec.quarter.str(), std::to_string(rec.review_count),
                               csv::format_exact(rec.compound_sum), csv::format_exact(rec.perception)});
        records.push_back(rec);
      }
    }

    auto fm = assemble(records, growth, c.aspects, c.include_lag);
    detail::write_output(c.out / "matches.csv", matches);
    detail::write_output(c.out / "perceptions.csv", perc);
    detail::write_output(features_path(c), write_feature_csv(fm));
    log("features: " + std::to_string(matched) + " of " + std::to_string(reviews.size()) +
        " reviews matched an aspect; matrix " + std::to_string(fm.rows()) + " x " + std::to_string(fm.cols()));
    return fm;
  });
}

inline void run_features(const Config& c, const Log& log = stderr_log) { build_features(c, log); }

/// Candidate specs for a model: its grid, or the spec alone.
inline std::vector<ForecasterSpec> candidates(const ModelConfig& m) {
  std::vector<ForecasterSpec> out;
  if (!m.gamma_grid.empty()) {
    for (double g : m.gamma_grid) {
      auto s = m.spec;
      std::get<SvrSpec>(s.params).gamma = g;
      out.push_back(s);
    }
  } else if (!m.orders_grid.empty()) {
    for (const auto& o : m.orders_grid) {
      auto s = m.spec;
      s.params = o;
      out.push_back(s);
    }
  } else {
    out.push_back(m.spec);
  }
  return out;
}

inline std::string describe(const ForecasterSpec& s) {
  return s.kind() + " " + hyperparameters_to_json(s.params).dump();
}

inline void run_fit(const Config& c, const Log& log = stderr_log) {
  detail::in_stage("fit", [&] {
    if (c.models.empty()) throw Error("config lists no models");
    const auto fm = load_features(c);
    const auto train = chronological_split(fm, c.split).first;
    std::string grid = csv::join_row({"model", "rank", "candidate", "score", "error"});
    for (const auto& m : c.models) {
      try {
        const auto data = train.select_columns(model_columns(c, m, fm));
        auto specs = candidates(m);
        ForecasterSpec chosen = specs.front();
        if (specs.size() > 1) {
          const auto ranked = grid_search(specs, data);
          for (std::size_t r = 0; r < ranked.size(); ++r) {
            grid += csv::join_row({m.label, std::to_string(r + 1), describe(ranked[r].spec),
                                   ranked[r].score ? csv::format_exact(*ranked[r].score) : "", ranked[r].error});
          }
          if (!ranked.front().score) throw Error("every grid candidate failed; first error: " + ranked.front().error);
          chosen = ranked.front().spec;
        }
        const auto f = fit(chosen, data);
        detail::write_output(model_path(c, m.label), to_json(f).dump(2) + "\n");
        log("fit: " + m.label + " -> " + describe(chosen));
      } catch (const std::exception& e) {
        throw Error("model '" + m.label + "': " + e.what());
      }
    }
    detail::write_output(c.out / "grid_search.csv", grid);
  });
}

inline Forecaster load_model(const Config& c, const std::string& label) {
  const auto p = model_path(c, label);
  if (!fs::exists(p)) throw Error("'" + p.string() + "' not found; run the fit stage first");
  return detail::with_file(p, [&] {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(detail::read_input(p));
    } catch (const nlohmann::json::exception& e) {
      throw Error(std::string("malformed model JSON: ") + e.what());
    }
    return forecaster_from_json(j);
  });
}

inline void run_predict(const Config& c, const Log& log = stderr_log) {
  detail::in_stage("predict", [&] {
    if (c.models.empty()) throw Error("config lists no models");
    const auto fm = load_features(c);
    const auto test = chronological_split(fm, c.split).second;
    std::vector<std::string> header{"quarter", "actual"};
    std::vector<std::vector<double>> columns;
    for (const auto& m : c.models) {
      try {
        const auto f = load_model(c, m.label);
        columns.push_back(predict(f, test.select_columns(model_columns(c, m, fm))));
      } catch (const std::exception& e) {
        throw Error("model '" + m.label + "': " + e.what());
      }
      header.push_back(m.label);
    }
    std::string out = csv::join_row(header);
    for (std::size_t r = 0; r < test.rows(); ++r) {
      std::vector<std::string> row{test.quarters[r].str(), csv::format_exact(test.target(static_cast<Eigen::Index>(r)))};
      for (const auto& col : columns) row.push_back(csv::format_exact(col[r]));
      out += csv::join_row(row);
    }
    detail::write_output(predictions_path(c), out);
    log("predict: " + std::to_string(test.rows()) + " test quarters, " + std::to_string(c.models.size()) + " models");
  });
}

inline EvalReport build_report(const Config& c) {
  const auto fm = load_features(c);
  const auto [train, test] = chronological_split(fm, c.split);
  const double history = train.target(train.target.size() - 1);
  const auto p = predictions_path(c);
  if (!fs::exists(p)) throw Error("'" + p.string() + "' not found; run the predict stage first");
  const auto records = detail::with_file(p, [&] { return csv::parse(detail::read_input(p)); });
  return detail::with_file(p, [&] {
    if (records.empty()) throw ParseError(1, "empty predictions file");
    const auto& h = records.front().fields;
    std::vector<Quarter> quarters;
    std::vector<double> actual;
    std::map<std::string, std::vector<double>> predicted;
    for (std::size_t i = 1; i < records.size(); ++i) {
      const auto& r = records[i];
      if (r.fields.size() != h.size()) throw ParseError(r.line, "wrong number of fields");
      quarters.push_back(detail::quarter_at(r.fields[0], r.line));
      actual.push_back(csv::parse_double(r.fields[1], r.line, "actual"));
      for (std::size_t k = 2; k < h.size(); ++k) predicted[h[k]].push_back(csv::parse_double(r.fields[k], r.line, "prediction"));
    }
    if (quarters != test.quarters) throw Error("prediction quarters do not match the test split of features.csv");
    EvalReport report;
    for (const auto& m : c.models) {
      auto it = predicted.find(m.label);
      if (it == predicted.end()) throw Error("no predictions for model '" + m.label + "'");
      try {
        report.rows.push_back(score_row(m.label, quarters, actual, it->second, c.theil, history));
      } catch (const std::exception& e) {
        throw Error("model '" + m.label + "': " + e.what());
      }
    }
    return report;
  });
}

inline void run_evaluate(const Config& c, const Log& log = stderr_log) {
  detail::in_stage("evaluate", [&] {
    const auto report = build_report(c);
    detail::write_output(c.out / "report.csv", emit_report(report, ReportFormat::csv));
    detail::write_output(c.out / "report.json", emit_report(report, ReportFormat::json));
    detail::write_output(c.out / "plot_data.csv", emit_plot_data(report));
    for (const auto& r : report.rows) {
      log("evaluate: " + r.label + " rmse=" + csv::format_fixed(r.rmse, 9) + " " + to_string(c.theil.variant) + "=" +
          csv::format_fixed(r.theils_u, 9));
    }
  });
}

inline void run_pipeline(const Config& c, const Log& log = stderr_log) {
  run_ingest(c, log);
  run_sentiment(c, log);
  run_features(c, log);
  run_fit(c, log);
  run_predict(c, log);
  run_evaluate(c, log);
}

}  // namespace aspectcast::pipeline
