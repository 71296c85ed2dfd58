#pragma once

// ARIMA(p, d, q) estimated by conditional sum of squares.
//
// On the d-times differenced series w:
//   w_t = c + sum_i phi_i w_{t-i} + e_t - sum_j theta_j e_{t-j}
// Residuals are computed for t >= p with pre-sample errors set to zero and the
// squared residuals are minimized with Levenberg-Marquardt.

#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "aspectcast/error.hpp"
#include "aspectcast/features.hpp"
#include "aspectcast/models/lm.hpp"

namespace aspectcast {

struct ArimaOrder {
  int p = 1;
  int d = 0;
  int q = 0;

  std::string str() const {
    return "(" + std::to_string(p) + "," + std::to_string(d) + "," + std::to_string(q) + ")";
  }
  friend bool operator==(const ArimaOrder&, const ArimaOrder&) = default;
};

struct ArimaModel {
  ArimaOrder order;
  double constant = 0.0;
  std::vector<double> ar;         // phi_1..phi_p
  std::vector<double> ma;         // theta_1..theta_q
  std::vector<double> series;     // the series the model was fitted on
  std::vector<double> residuals;  // e_t on the differenced scale, one per differenced point
  double css = 0.0;               // sum of squared residuals
  bool ma_invertible = true;
};

/// First differences applied `d` times.
inline std::vector<double> difference(std::span<const double> x, int d) {
  std::vector<double> out(x.begin(), x.end());
  for (int k = 0; k < d; ++k) {
    if (out.size() < 2) return {};
    std::vector<double> next(out.size() - 1);
    for (std::size_t i = 1; i < out.size(); ++i) next[i - 1] = out[i] - out[i - 1];
    out = std::move(next);
  }
  return out;
}

/// CSS residual map over (c, phi_1..phi_p, theta_1..theta_q).
class ArimaCssProblem {
 public:
  ArimaCssProblem(std::vector<double> w, int p, int q) : w_(std::move(w)), p_(p), q_(q) {}

  Eigen::Index parameter_count() const { return 1 + p_ + q_; }

  /// Errors for every t (zero for t < p).
  std::vector<double> errors(const Eigen::VectorXd& params) const {
    const auto n = w_.size();
    std::vector<double> e(n, 0.0);
    for (std::size_t t = static_cast<std::size_t>(p_); t < n; ++t) {
      double v = w_[t] - params(0);
      for (int i = 1; i <= p_; ++i) v -= params(i) * w_[t - static_cast<std::size_t>(i)];
      for (int j = 1; j <= q_; ++j) {
        if (t >= static_cast<std::size_t>(j)) v += params(p_ + j) * e[t - static_cast<std::size_t>(j)];
      }
      e[t] = v;
    }
    return e;
  }

  Eigen::VectorXd residuals(const Eigen::VectorXd& params) const {
    const auto e = errors(params);
    return Eigen::Map<const Eigen::VectorXd>(e.data() + p_, static_cast<Eigen::Index>(e.size()) - p_);
  }

  // d e_t / d theta: e_t depends on theta through e_{t-j}, so the derivatives
  // follow the same recursion.
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& params) const {
    const auto n = w_.size();
    const auto k = parameter_count();
    const auto e = errors(params);
    Eigen::MatrixXd de = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), k);
    for (std::size_t t = static_cast<std::size_t>(p_); t < n; ++t) {
      const auto row = static_cast<Eigen::Index>(t);
      de(row, 0) = -1.0;
      for (int i = 1; i <= p_; ++i) de(row, i) = -w_[t - static_cast<std::size_t>(i)];
      for (int j = 1; j <= q_; ++j) {
        if (t < static_cast<std::size_t>(j)) continue;
        const auto lag = static_cast<Eigen::Index>(t - static_cast<std::size_t>(j));
        de.row(row) += params(p_ + j) * de.row(lag);
        de(row, p_ + j) += e[t - static_cast<std::size_t>(j)];
      }
    }
    return de.bottomRows(static_cast<Eigen::Index>(n) - p_);
  }

 private:
  std::vector<double> w_;
  int p_;
  int q_;
};

/// True when all roots of 1 - theta_1 z - ... - theta_q z^q lie outside the unit circle.
inline bool ma_is_invertible(const std::vector<double>& theta) {
  std::size_t q = theta.size();
  while (q > 0 && theta[q - 1] == 0.0) --q;
  if (q == 0) return true;
  // Reciprocal roots are the eigenvalues of the companion matrix of
  // z^q - theta_1 z^{q-1} - ... - theta_q.
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(q));
  for (std::size_t j = 0; j < q; ++j) companion(0, static_cast<Eigen::Index>(j)) = theta[j];
  for (std::size_t i = 1; i < q; ++i) companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    if (std::abs(es.eigenvalues()(i)) >= 1.0) return false;
  }
  return true;
}

inline ArimaModel fit_arima(std::span<const double> series, ArimaOrder order) {
  if (order.p < 0 || order.d < 0 || order.q < 0) throw Error("ARIMA orders must be non-negative");
  const auto w = difference(series, order.d);
  const auto needed = static_cast<std::size_t>(order.p + order.q + 2);
  if (w.size() < needed) {
    throw Error("series too short for ARIMA" + order.str() + ": " + std::to_string(w.size()) +
                " points after differencing, need " + std::to_string(needed));
  }

  ArimaCssProblem problem(w, order.p, order.q);
  Eigen::VectorXd start = Eigen::VectorXd::Zero(problem.parameter_count());
  double mean = 0.0;
  for (std::size_t t = static_cast<std::size_t>(order.p); t < w.size(); ++t) mean += w[t];
  start(0) = mean / static_cast<double>(w.size() - static_cast<std::size_t>(order.p));

  const auto run = lm_minimize(start, problem, 1e-3, 500);

  ArimaModel m;
  m.order = order;
  m.constant = run.params(0);
  for (int i = 1; i <= order.p; ++i) m.ar.push_back(run.params(i));
  for (int j = 1; j <= order.q; ++j) m.ma.push_back(run.params(order.p + j));
  m.series.assign(series.begin(), series.end());
  m.residuals = problem.errors(run.params);
  m.css = 2.0 * run.error;
  for (double e : m.residuals) {
    if (!std::isfinite(e)) throw Error("ARIMA" + order.str() + " produced non-finite residuals");
  }
  m.ma_invertible = ma_is_invertible(m.ma);
  return m;
}

inline ArimaModel fit_arima(const GrowthSeries& series, ArimaOrder order) {
  const auto v = series.values();
  return fit_arima(std::span<const double>(v), order);
}

/// Iterated one-step forecasts (future errors zero), integrated back d times.
inline std::vector<double> forecast_arima(const ArimaModel& m, std::size_t horizon) {
  if (horizon == 0) throw Error("forecast horizon must be >= 1");
  std::vector<double> w = difference(m.series, m.order.d);
  std::vector<double> e = m.residuals;
  const std::size_t n = w.size();
  for (std::size_t h = 0; h < horizon; ++h) {
    const std::size_t t = n + h;
    double v = m.constant;
    for (int i = 1; i <= m.order.p; ++i) v += m.ar[static_cast<std::size_t>(i - 1)] * w[t - static_cast<std::size_t>(i)];
    for (int j = 1; j <= m.order.q; ++j) {
      if (t >= static_cast<std::size_t>(j)) v -= m.ma[static_cast<std::size_t>(j - 1)] * e[t - static_cast<std::size_t>(j)];
    }
    w.push_back(v);
    e.push_back(0.0);
  }
  std::vector<double> out(w.begin() + static_cast<std::ptrdiff_t>(n), w.end());

  // Undo differencing from the innermost level out, seeding each level with
  // the last observed value of the series at that level.
  for (int level = m.order.d - 1; level >= 0; --level) {
    const auto observed = difference(m.series, level);
    double last = observed.back();
    for (double& v : out) {
      last += v;
      v = last;
    }
  }
  return out;
}

}  // namespace aspectcast
