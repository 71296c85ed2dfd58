#pragma once

// Backtests and the report / plot-data files built from them.

#include <concepts>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aspectcast/csv.hpp"
#include "aspectcast/error.hpp"
#include "aspectcast/features.hpp"
#include "aspectcast/metrics.hpp"
#include "aspectcast/models/forecaster.hpp"

namespace aspectcast {

struct EvalPoint {
  Quarter quarter;
  double actual = 0.0;
  double predicted = 0.0;
};

struct EvalRow {
  std::string label;
  double mse = 0.0;
  double rmse = 0.0;
  double theils_u = 0.0;
  std::vector<EvalPoint> points;
};

struct EvalReport {
  std::vector<EvalRow> rows;
};

struct TheilOptions {
  TheilVariant variant = TheilVariant::u2;
  bool use_history = true;  // last training target as the U2 history point
};

/// Scores predictions for the given quarters.
inline EvalRow score_row(std::string label, const std::vector<Quarter>& quarters, const std::vector<double>& actual,
                         const std::vector<double>& predicted, TheilOptions theil, std::optional<double> history) {
  if (quarters.size() != actual.size()) throw Error("quarter and value counts differ");
  EvalRow row;
  row.label = std::move(label);
  row.mse = mse(actual, predicted);
  row.rmse = std::sqrt(row.mse);
  row.theils_u = theils_u(actual, predicted, theil.variant, theil.use_history ? history : std::nullopt);
  for (std::size_t i = 0; i < quarters.size(); ++i) row.points.push_back({quarters[i], actual[i], predicted[i]});
  return row;
}

/// Fits on the chronological train part and scores the test part.
/// `fit_predict(train, test)` returns one prediction per test row.
template <class FitPredict>
  requires std::invocable<FitPredict&, const FeatureMatrix&, const FeatureMatrix&>
EvalRow backtest(const std::string& label, FitPredict&& fit_predict, const FeatureMatrix& data, SplitRatio ratio,
                 TheilOptions theil = {}) {
  try {
    const auto [train, test] = chronological_split(data, ratio);
    const std::vector<double> predicted = fit_predict(train, test);
    const std::vector<double> actual(test.target.data(), test.target.data() + test.target.size());
    return score_row(label, test.quarters, actual, predicted, theil, train.target(train.target.size() - 1));
  } catch (const std::exception& e) {
    throw Error("model '" + label + "': " + e.what());
  }
}

inline EvalRow backtest(const std::string& label, const ForecasterSpec& spec, const FeatureMatrix& data,
                        SplitRatio ratio, TheilOptions theil = {}) {
  return backtest(
      label, [&](const FeatureMatrix& train, const FeatureMatrix& test) { return predict(fit(spec, train), test); }, data,
      ratio, theil);
}

inline EvalRow backtest(const std::string& label, const ForecasterSpec& spec, const GrowthSeries& series,
                        SplitRatio ratio, TheilOptions theil = {}) {
  return backtest(label, spec, series_matrix(series), ratio, theil);
}

enum class ReportFormat { csv, json };

/// `model,mse,rmse,theils_u` rows at 9 decimals, or a JSON mirror with the
/// per-quarter points.
inline std::string emit_report(const EvalReport& report, ReportFormat format) {
  if (format == ReportFormat::csv) {
    std::string out = csv::join_row({"model", "mse", "rmse", "theils_u"});
    for (const auto& r : report.rows) {
      out += csv::join_row({r.label, csv::format_fixed(r.mse, 9), csv::format_fixed(r.rmse, 9),
                            csv::format_fixed(r.theils_u, 9)});
    }
    return out;
  }
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : r.points) {
      points.push_back({{"quarter", p.quarter.str()}, {"actual", p.actual}, {"predicted", p.predicted}});
    }
    rows.push_back({{"model", r.label}, {"mse", r.mse}, {"rmse", r.rmse}, {"theils_u", r.theils_u}, {"points", points}});
  }
  return nlohmann::json{{"rows", rows}}.dump(2) + "\n";
}

/// `quarter,actual,<labels...>` over the union of quarters; missing cells are empty.
inline std::string emit_plot_data(const EvalReport& report) {
  std::vector<std::string> header{"quarter", "actual"};
  std::map<Quarter, double> actual;
  for (const auto& r : report.rows) {
    header.push_back(r.label);
    for (const auto& p : r.points) actual.emplace(p.quarter, p.actual);
  }
  std::string out = csv::join_row(header);
  for (const auto& [q, a] : actual) {
    std::vector<std::string> row{q.str(), csv::format_fixed(a, 9)};
    for (const auto& r : report.rows) {
      std::string cell;
      for (const auto& p : r.points) {
        if (p.quarter == q) cell = csv::format_fixed(p.predicted, 9);
      }
      row.push_back(cell);
    }
    out += csv::join_row(row);
  }
  return out;
}

}  // namespace aspectcast
