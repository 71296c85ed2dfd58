#pragma once

// One contract over the four forecasters: a spec is fitted on a training
// FeatureMatrix and the result predicts one value per row of another matrix.
// ARIMA ignores the feature columns: it is fitted on the training targets and
// forecasts as many steps ahead as the prediction matrix has rows.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "aspectcast/error.hpp"
#include "aspectcast/features.hpp"
#include "aspectcast/metrics.hpp"
#include "aspectcast/models/arima.hpp"
#include "aspectcast/models/linear.hpp"
#include "aspectcast/models/mlp.hpp"
#include "aspectcast/models/svr.hpp"

namespace aspectcast {

struct LinearSpec {
  LinearSelection selection;
};

using ModelParams = std::variant<LinearSpec, MlpSpec, SvrSpec, ArimaOrder>;
using FittedModel = std::variant<LinearModel, MlpModel, SvrModel, ArimaModel>;

struct ForecasterSpec {
  ModelParams params;
  std::uint64_t seed = 0;

  std::string kind() const {
    static const char* names[] = {"lr", "mlp", "svr", "arima"};
    return names[params.index()];
  }
};

struct Forecaster {
  ForecasterSpec spec;
  FittedModel model;
};

inline Forecaster fit(const ForecasterSpec& spec, const FeatureMatrix& train) {
  if (train.rows() == 0) throw Error("empty training data");
  return std::visit(
      [&](const auto& p) -> Forecaster {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, LinearSpec>) {
          return {spec, fit_lr(train, p.selection)};
        } else if constexpr (std::is_same_v<P, MlpSpec>) {
          return {spec, fit_mlp(train, p, spec.seed)};
        } else if constexpr (std::is_same_v<P, SvrSpec>) {
          return {spec, fit_nusvr(train, p)};
        } else {
          const std::vector<double> y(train.target.data(), train.target.data() + train.target.size());
          return {spec, fit_arima(std::span<const double>(y), p)};
        }
      },
      spec.params);
}

inline std::vector<double> predict(const Forecaster& f, const FeatureMatrix& rows) {
  if (rows.rows() == 0) return {};
  return std::visit(
      [&](const auto& m) -> std::vector<double> {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, LinearModel>) {
          return predict_lr(m, rows);
        } else if constexpr (std::is_same_v<M, MlpModel>) {
          return predict_mlp(m, rows);
        } else if constexpr (std::is_same_v<M, SvrModel>) {
          return predict_nusvr(m, rows);
        } else {
          return forecast_arima(m, rows.rows());
        }
      },
      f.model);
}

/// A growth series as a matrix with no feature columns.
inline FeatureMatrix series_matrix(const GrowthSeries& s) {
  FeatureMatrix m;
  m.values.resize(static_cast<Eigen::Index>(s.size()), 0);
  m.target.resize(static_cast<Eigen::Index>(s.size()));
  for (std::size_t i = 0; i < s.size(); ++i) {
    m.quarters.push_back(s.points()[i].first);
    m.target(static_cast<Eigen::Index>(i)) = s.points()[i].second;
  }
  return m;
}

// ---- JSON ---------------------------------------------------------------

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                                const std::string& where) {
  if (!j.is_object()) throw Error(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) == allowed.end()) {
      throw Error("unknown key '" + key + "' in " + where);
    }
  }
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  try {
    return it->template get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(std::string("invalid value for '") + key + "'");
  }
}

template <class T>
T require(const nlohmann::json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(where + " is missing '" + key + "'");
  try {
    return it->template get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(std::string("invalid value for '") + key + "' in " + where);
  }
}

inline std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace detail

inline nlohmann::json hyperparameters_to_json(const ModelParams& params) {
  return std::visit(
      [](const auto& p) -> nlohmann::json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, LinearSpec>) {
          return {{"selection", p.selection.kind == LinearSelection::Kind::all ? "all" : "backward_stepwise"},
                  {"threshold", p.selection.threshold}};
        } else if constexpr (std::is_same_v<P, MlpSpec>) {
          return {{"hidden", p.hidden}, {"max_epochs", p.max_epochs}, {"lambda0", p.lambda0}, {"patience", p.patience}};
        } else if constexpr (std::is_same_v<P, SvrSpec>) {
          return {{"gamma", p.gamma}, {"nu", p.nu}, {"C", p.C}, {"tolerance", p.tolerance},
                  {"max_iterations", p.max_iterations}};
        } else {
          return {{"p", p.p}, {"d", p.d}, {"q", p.q}};
        }
      },
      params);
}

/// Kind-specific hyperparameters; absent keys take defaults, unknown keys are errors.
inline ModelParams hyperparameters_from_json(const std::string& kind, const nlohmann::json& j) {
  const nlohmann::json h = j.is_null() ? nlohmann::json::object() : j;
  const std::string where = kind + " hyperparameters";
  if (kind == "lr") {
    detail::reject_unknown_keys(h, {"selection", "threshold"}, where);
    LinearSpec s;
    const auto sel = detail::get_or<std::string>(h, "selection", "all");
    if (sel == "all") {
      s.selection.kind = LinearSelection::Kind::all;
    } else if (sel == "backward_stepwise") {
      s.selection.kind = LinearSelection::Kind::backward_stepwise;
    } else {
      throw Error("unknown selection '" + sel + "' (expected all or backward_stepwise)");
    }
    s.selection.threshold = detail::get_or<double>(h, "threshold", s.selection.threshold);
    if (!(s.selection.threshold > 0.0 && s.selection.threshold <= 1.0)) throw Error("threshold must be in (0, 1]");
    return s;
  }
  if (kind == "mlp") {
    detail::reject_unknown_keys(h, {"hidden", "max_epochs", "lambda0", "patience"}, where);
    MlpSpec s;
    s.hidden = detail::get_or<int>(h, "hidden", s.hidden);
    s.max_epochs = detail::get_or<int>(h, "max_epochs", s.max_epochs);
    s.lambda0 = detail::get_or<double>(h, "lambda0", s.lambda0);
    s.patience = detail::get_or<int>(h, "patience", s.patience);
    if (s.hidden < 1) throw Error("hidden must be >= 1");
    if (s.max_epochs < 0) throw Error("max_epochs must be >= 0");
    if (!(s.lambda0 > 0.0)) throw Error("lambda0 must be positive");
    if (s.patience < 1) throw Error("patience must be >= 1");
    return s;
  }
  if (kind == "svr") {
    detail::reject_unknown_keys(h, {"gamma", "nu", "C", "tolerance", "max_iterations"}, where);
    SvrSpec s;
    s.gamma = detail::get_or<double>(h, "gamma", s.gamma);
    s.nu = detail::get_or<double>(h, "nu", s.nu);
    s.C = detail::get_or<double>(h, "C", s.C);
    s.tolerance = detail::get_or<double>(h, "tolerance", s.tolerance);
    s.max_iterations = detail::get_or<long>(h, "max_iterations", s.max_iterations);
    if (!(s.gamma > 0.0)) throw Error("gamma must be positive");
    if (!(s.nu > 0.0 && s.nu <= 1.0)) throw Error("nu must be in (0, 1]");
    if (!(s.C > 0.0)) throw Error("C must be positive");
    if (!(s.tolerance > 0.0)) throw Error("tolerance must be positive");
    if (s.max_iterations < 1) throw Error("max_iterations must be >= 1");
    return s;
  }
  if (kind == "arima") {
    detail::reject_unknown_keys(h, {"p", "d", "q"}, where);
    ArimaOrder o;
    o.p = detail::get_or<int>(h, "p", o.p);
    o.d = detail::get_or<int>(h, "d", o.d);
    o.q = detail::get_or<int>(h, "q", o.q);
    if (o.p < 0 || o.d < 0 || o.q < 0) throw Error("ARIMA orders must be non-negative");
    return o;
  }
  throw Error("unknown model kind '" + kind + "' (expected lr, mlp, svr or arima)");
}

inline nlohmann::json spec_to_json(const ForecasterSpec& spec) {
  return {{"kind", spec.kind()}, {"hyperparameters", hyperparameters_to_json(spec.params)}, {"seed", spec.seed}};
}

inline ForecasterSpec spec_from_json(const nlohmann::json& j) {
  ForecasterSpec s;
  const auto kind = detail::require<std::string>(j, "kind", "model spec");
  s.params = hyperparameters_from_json(kind, j.contains("hyperparameters") ? j.at("hyperparameters") : nlohmann::json());
  s.seed = detail::get_or<std::uint64_t>(j, "seed", 0);
  return s;
}

/// Spec fields plus the fitted parameters under "model".
inline nlohmann::json to_json(const Forecaster& f) {
  nlohmann::json j = spec_to_json(f.spec);
  j["model"] = std::visit(
      [](const auto& m) -> nlohmann::json {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, LinearModel>) {
          nlohmann::json coefs = nlohmann::json::object();
          for (const auto& [k, v] : m.coefficients) coefs[k] = v;
          return {{"intercept", m.intercept}, {"coefficients", coefs}, {"selected_features", m.selected_features}};
        } else if constexpr (std::is_same_v<M, MlpModel>) {
          nlohmann::json trace = nlohmann::json::array();
          for (const auto& e : m.trace) {
            trace.push_back({{"epoch", e.epoch},
                             {"train_error", e.train_error},
                             {"validation_error", e.validation_error},
                             {"test_error", e.test_error}});
          }
          return {{"features", m.features},
                  {"hidden", m.hidden},
                  {"parameters", detail::to_vector(m.weights.pack())},
                  {"target_offset", m.target_offset},
                  {"target_scale", m.target_scale},
                  {"best_epoch", m.best_epoch},
                  {"trace", trace}};
        } else if constexpr (std::is_same_v<M, SvrModel>) {
          nlohmann::json sv = nlohmann::json::array();
          for (Eigen::Index i = 0; i < m.support_vectors.rows(); ++i) {
            sv.push_back(detail::to_vector(m.support_vectors.row(i).transpose()));
          }
          return {{"features", m.features},
                  {"n_train", m.n_train},
                  {"support_vectors", sv},
                  {"dual_coefficients", detail::to_vector(m.coefficients)},
                  {"bias", m.bias},
                  {"epsilon", m.epsilon},
                  {"kkt_violation", m.kkt_violation},
                  {"iterations", m.iterations}};
        } else {
          return {{"constant", m.constant}, {"ar", m.ar},     {"ma", m.ma},   {"series", m.series},
                  {"residuals", m.residuals}, {"css", m.css}, {"ma_invertible", m.ma_invertible}};
        }
      },
      f.model);
  return j;
}

inline Forecaster forecaster_from_json(const nlohmann::json& j) {
  Forecaster f;
  f.spec = spec_from_json(j);
  if (!j.contains("model")) throw Error("model file is missing 'model'");
  const auto& m = j.at("model");
  const std::string where = f.spec.kind() + " model";
  try {
    switch (f.spec.params.index()) {
      case 0: {
        LinearModel lm;
        lm.intercept = detail::require<double>(m, "intercept", where);
        lm.selected_features = detail::require<std::vector<std::string>>(m, "selected_features", where);
        lm.coefficients = detail::require<std::map<std::string, double>>(m, "coefficients", where);
        for (const auto& [k, v] : lm.coefficients) {
          if (std::find(lm.selected_features.begin(), lm.selected_features.end(), k) == lm.selected_features.end()) {
            throw Error("coefficient '" + k + "' is not a selected feature");
          }
        }
        for (const auto& name : lm.selected_features) {
          if (!lm.coefficients.count(name)) throw Error("selected feature '" + name + "' has no coefficient");
        }
        f.model = std::move(lm);
        break;
      }
      case 1: {
        MlpModel mm;
        mm.features = detail::require<std::vector<std::string>>(m, "features", where);
        mm.hidden = detail::require<int>(m, "hidden", where);
        const auto params = detail::require<std::vector<double>>(m, "parameters", where);
        mm.weights = MlpWeights::unpack(detail::to_eigen(params), static_cast<Eigen::Index>(mm.features.size()), mm.hidden);
        mm.target_offset = detail::require<double>(m, "target_offset", where);
        mm.target_scale = detail::require<double>(m, "target_scale", where);
        mm.best_epoch = detail::get_or<int>(m, "best_epoch", 0);
        mm.seed = f.spec.seed;
        for (const auto& e : m.value("trace", nlohmann::json::array())) {
          mm.trace.push_back({e.at("epoch").get<int>(), e.at("train_error").get<double>(),
                              e.at("validation_error").get<double>(), e.at("test_error").get<double>()});
        }
        f.model = std::move(mm);
        break;
      }
      case 2: {
        const auto& spec = std::get<SvrSpec>(f.spec.params);
        SvrModel sm;
        sm.features = detail::require<std::vector<std::string>>(m, "features", where);
        sm.gamma = spec.gamma;
        sm.nu = spec.nu;
        sm.C = spec.C;
        sm.n_train = detail::require<std::size_t>(m, "n_train", where);
        const auto sv = detail::require<std::vector<std::vector<double>>>(m, "support_vectors", where);
        const auto coef = detail::require<std::vector<double>>(m, "dual_coefficients", where);
        if (sv.size() != coef.size()) throw Error("support vector and coefficient counts differ");
        sm.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), static_cast<Eigen::Index>(sm.features.size()));
        for (std::size_t i = 0; i < sv.size(); ++i) {
          if (sv[i].size() != sm.features.size()) throw Error("support vector has the wrong dimension");
          sm.support_vectors.row(static_cast<Eigen::Index>(i)) = detail::to_eigen(sv[i]).transpose();
        }
        sm.coefficients = detail::to_eigen(coef);
        sm.bias = detail::require<double>(m, "bias", where);
        sm.epsilon = detail::get_or<double>(m, "epsilon", 0.0);
        sm.kkt_violation = detail::get_or<double>(m, "kkt_violation", 0.0);
        sm.iterations = detail::get_or<long>(m, "iterations", 0);
        f.model = std::move(sm);
        break;
      }
      default: {
        ArimaModel am;
        am.order = std::get<ArimaOrder>(f.spec.params);
        am.constant = detail::require<double>(m, "constant", where);
        am.ar = detail::require<std::vector<double>>(m, "ar", where);
        am.ma = detail::require<std::vector<double>>(m, "ma", where);
        am.series = detail::require<std::vector<double>>(m, "series", where);
        am.residuals = detail::require<std::vector<double>>(m, "residuals", where);
        am.css = detail::get_or<double>(m, "css", 0.0);
        am.ma_invertible = detail::get_or<bool>(m, "ma_invertible", true);
        if (am.ar.size() != static_cast<std::size_t>(am.order.p) || am.ma.size() != static_cast<std::size_t>(am.order.q)) {
          throw Error("ARIMA coefficient counts do not match the orders");
        }
        if (am.residuals.size() != difference(am.series, am.order.d).size()) {
          throw Error("ARIMA residual count does not match the series");
        }
        f.model = std::move(am);
        break;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed " + where + ": " + e.what());
  }
  return f;
}

// ---- grid search --------------------------------------------------------

using Metric = std::function<double(std::span<const double>, std::span<const double>)>;

struct GridEntry {
  std::size_t index = 0;  // position in the input spec list
  ForecasterSpec spec;
  std::optional<double> score;
  std::string error;
};

/// Fits each spec on the first part of an inner chronological split of
/// `train` and scores it on the rest. Lower scores rank first; ties keep
/// input order; failures rank last in input order.
inline std::vector<GridEntry> grid_search(const std::vector<ForecasterSpec>& specs, const FeatureMatrix& train,
                                          const Metric& score = [](std::span<const double> a,
                                                                   std::span<const double> p) { return mse(a, p); },
                                          SplitRatio inner = {}) {
  if (specs.empty()) throw Error("grid search needs at least one spec");
  const auto [fit_part, score_part] = chronological_split(train, inner);
  const std::vector<double> actual(score_part.target.data(), score_part.target.data() + score_part.target.size());
  std::vector<GridEntry> entries;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    GridEntry e{i, specs[i], std::nullopt, {}};
    try {
      const auto f = fit(specs[i], fit_part);
      const double s = score(actual, predict(f, score_part));
      if (std::isfinite(s)) {
        e.score = s;
      } else {
        e.error = "non-finite score";
      }
    } catch (const std::exception& ex) {
      e.error = ex.what();
    }
    entries.push_back(std::move(e));
  }
  std::stable_sort(entries.begin(), entries.end(), [](const GridEntry& a, const GridEntry& b) {
    if (a.score.has_value() != b.score.has_value()) return a.score.has_value();
    return a.score && *a.score < *b.score;
  });
  return entries;
}

inline std::vector<GridEntry> grid_search(const std::vector<ForecasterSpec>& specs, const GrowthSeries& train,
                                          const Metric& score = [](std::span<const double> a,
                                                                   std::span<const double> p) { return mse(a, p); },
                                          SplitRatio inner = {}) {
  return grid_search(specs, series_matrix(train), score, inner);
}

}  // namespace aspectcast
