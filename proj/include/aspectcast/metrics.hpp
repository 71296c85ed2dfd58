#pragma once

// Point-forecast error metrics.

#include <cmath>
#include <optional>
#include <span>
#include <string>

#include "aspectcast/error.hpp"

namespace aspectcast {

namespace detail {

inline void check_lengths(std::span<const double> actual, std::span<const double> predicted) {
  if (actual.empty() || predicted.empty()) throw Error("metric needs non-empty inputs");
  if (actual.size() != predicted.size()) {
    throw Error("length mismatch: " + std::to_string(actual.size()) + " actual vs " +
                std::to_string(predicted.size()) + " predicted");
  }
}

}  // namespace detail

inline double mse(std::span<const double> actual, std::span<const double> predicted) {
  detail::check_lengths(actual, predicted);
  double s = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double d = predicted[i] - actual[i];
    s += d * d;
  }
  return s / static_cast<double>(actual.size());
}

inline double rmse(std::span<const double> actual, std::span<const double> predicted) {
  return std::sqrt(mse(actual, predicted));
}

enum class TheilVariant { u1, u2 };

inline std::string to_string(TheilVariant v) { return v == TheilVariant::u1 ? "U1" : "U2"; }

inline TheilVariant theil_variant_from_string(const std::string& s) {
  if (s == "U1" || s == "u1") return TheilVariant::u1;
  if (s == "U2" || s == "u2") return TheilVariant::u2;
  throw Error("unknown Theil variant '" + s + "' (expected U1 or U2)");
}

/// U1 = rmse / (rms(actual) + rms(predicted)).
/// U2 = sqrt(sum (p_t - a_t)^2) / sqrt(sum (a_t - a_{t-1})^2). With `history`
/// it stands in for a_0's predecessor; without it both sums start at the
/// second point.
inline double theils_u(std::span<const double> actual, std::span<const double> predicted, TheilVariant variant,
                       std::optional<double> history = std::nullopt) {
  detail::check_lengths(actual, predicted);
  const std::size_t n = actual.size();
  double num = 0.0;
  double den = 0.0;
  if (variant == TheilVariant::u1) {
    double sa = 0.0;
    double sp = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sa += actual[i] * actual[i];
      sp += predicted[i] * predicted[i];
    }
    num = rmse(actual, predicted);
    den = std::sqrt(sa / static_cast<double>(n)) + std::sqrt(sp / static_cast<double>(n));
  } else {
    if (!history && n < 2) throw Error("U2 needs a history point or at least 2 observations");
    for (std::size_t t = history ? 0 : 1; t < n; ++t) {
      const double prev = t == 0 ? *history : actual[t - 1];
      const double e = predicted[t] - actual[t];
      const double naive = actual[t] - prev;
      num += e * e;
      den += naive * naive;
    }
    num = std::sqrt(num);
    den = std::sqrt(den);
  }
  if (den == 0.0) throw Error("undefined U for constant/zero series");
  return num / den;
}

}  // namespace aspectcast
