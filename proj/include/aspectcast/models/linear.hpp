#pragma once

// Ordinary least squares with optional backward stepwise elimination by
// t-statistic p-values.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "aspectcast/error.hpp"
#include "aspectcast/features.hpp"

namespace aspectcast {

inline constexpr const char* kInterceptName = "intercept";

struct LinearModel {
  double intercept = 0.0;
  std::map<std::string, double> coefficients;
  std::vector<std::string> selected_features;
};

struct LinearSelection {
  enum class Kind { all, backward_stepwise };
  Kind kind = Kind::all;
  double threshold = 0.3;  // remove while the largest p-value exceeds this
};

/// Design columns that are linear combinations of earlier ones.
class CollinearityError : public Error {
 public:
  CollinearityError(std::vector<std::string> columns, const std::string& what)
      : Error(what), columns_(std::move(columns)) {}
  const std::vector<std::string>& columns() const noexcept { return columns_; }

 private:
  std::vector<std::string> columns_;
};

struct OlsFit {
  double intercept = 0.0;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd residuals;
  Eigen::VectorXd p_values;  // per feature; NaN when the residual dof is 0
  double rss = 0.0;
  long dof = 0;
};

/// OLS of y on [1, X] via column-pivoted Householder QR.
inline OlsFit ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<std::string>& names) {
  const auto n = X.rows();
  const auto k = X.cols();
  if (n < k + 1) {
    throw Error("too few rows for linear regression: " + std::to_string(n) + " rows, " + std::to_string(k) +
                " features (need at least features + 1)");
  }
  Eigen::MatrixXd design(n, k + 1);
  design.col(0).setOnes();
  design.rightCols(k) = X;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < design.cols()) {
    std::vector<std::string> bad;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index i = qr.rank(); i < design.cols(); ++i) {
      const auto col = perm(i);
      bad.push_back(col == 0 ? std::string(kInterceptName) : names[static_cast<std::size_t>(col - 1)]);
    }
    std::string list;
    for (const auto& b : bad) list += (list.empty() ? "" : ", ") + b;
    throw CollinearityError(bad, "rank-deficient design; collinear columns: " + list);
  }

  const Eigen::VectorXd beta = qr.solve(y);
  OlsFit fit;
  fit.intercept = beta(0);
  fit.coefficients = beta.tail(k);
  fit.residuals = y - design * beta;
  fit.rss = fit.residuals.squaredNorm();
  fit.dof = static_cast<long>(n - k - 1);
  fit.p_values = Eigen::VectorXd::Constant(k, std::numeric_limits<double>::quiet_NaN());
  if (fit.dof > 0 && k > 0) {
    const double sigma2 = fit.rss / static_cast<double>(fit.dof);
    // diag((D^T D)^-1) from R^{-1} and the column permutation.
    const auto p = design.cols();
    const Eigen::MatrixXd R = qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
    const Eigen::MatrixXd Rinv = R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
    const Eigen::VectorXd diag_permuted = Rinv.rowwise().squaredNorm();
    Eigen::VectorXd diag(p);
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index i = 0; i < p; ++i) diag(perm(i)) = diag_permuted(i);

    boost::math::students_t dist(static_cast<double>(fit.dof));
    for (Eigen::Index j = 0; j < k; ++j) {
      const double se = std::sqrt(sigma2 * diag(j + 1));
      if (se == 0.0) {
        fit.p_values(j) = 0.0;
        continue;
      }
      const double t = std::fabs(fit.coefficients(j) / se);
      fit.p_values(j) = 2.0 * boost::math::cdf(boost::math::complement(dist, t));
    }
  }
  return fit;
}

namespace detail {

inline LinearModel to_linear_model(const OlsFit& fit, const std::vector<std::string>& names) {
  LinearModel m;
  m.intercept = fit.intercept;
  m.selected_features = names;
  for (std::size_t j = 0; j < names.size(); ++j) m.coefficients[names[j]] = fit.coefficients(static_cast<Eigen::Index>(j));
  return m;
}

inline double abs_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd ac = a.array() - a.mean();
  const Eigen::VectorXd bc = b.array() - b.mean();
  const double denom = ac.norm() * bc.norm();
  return denom == 0.0 ? 0.0 : std::fabs(ac.dot(bc)) / denom;
}

}  // namespace detail

/// Fits Y = a + sum b_j X_j on the training matrix.
///
/// With backward stepwise selection, constant columns are dropped first, then
/// the least target-correlated features until rows >= features + 2, then the
/// feature with the largest p-value above the threshold is removed one at a
/// time.
inline LinearModel fit_lr(const FeatureMatrix& train, LinearSelection selection = {}) {
  if (selection.kind == LinearSelection::Kind::all) {
    return detail::to_linear_model(ols(train.values, train.target, train.columns), train.columns);
  }

  const auto n = static_cast<std::size_t>(train.values.rows());
  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < train.cols(); ++j) {
    const auto col = train.values.col(static_cast<Eigen::Index>(j));
    if (col.maxCoeff() - col.minCoeff() > 0.0) active.push_back(j);
  }
  while (!active.empty() && n < active.size() + 2) {
    auto worst = active.begin();
    double worst_corr = std::numeric_limits<double>::infinity();
    for (auto it = active.begin(); it != active.end(); ++it) {
      const double c = detail::abs_correlation(train.values.col(static_cast<Eigen::Index>(*it)), train.target);
      if (c <= worst_corr) {
        worst_corr = c;
        worst = it;
      }
    }
    active.erase(worst);
  }

  auto names_of = [&](const std::vector<std::size_t>& idx) {
    std::vector<std::string> names;
    for (auto j : idx) names.push_back(train.columns[j]);
    return names;
  };
  auto matrix_of = [&](const std::vector<std::size_t>& idx) {
    Eigen::MatrixXd X(train.values.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) X.col(static_cast<Eigen::Index>(c)) = train.values.col(static_cast<Eigen::Index>(idx[c]));
    return X;
  };

  if (n < 2) throw Error("too few rows for linear regression: " + std::to_string(n));
  for (;;) {
    const auto names = names_of(active);
    OlsFit fit;
    try {
      fit = ols(matrix_of(active), train.target, names);
    } catch (const CollinearityError& e) {
      std::vector<std::size_t> keep;
      for (std::size_t c = 0; c < active.size(); ++c) {
        const auto& cols = e.columns();
        if (std::find(cols.begin(), cols.end(), names[c]) == cols.end()) keep.push_back(active[c]);
      }
      // Intercept flagged alone: drop the last feature so progress is guaranteed.
      if (keep.size() == active.size()) keep.pop_back();
      active = std::move(keep);
      continue;
    }
    if (active.empty()) return detail::to_linear_model(fit, names);

    Eigen::Index worst = 0;
    for (Eigen::Index j = 1; j < fit.p_values.size(); ++j) {
      if (fit.p_values(j) >= fit.p_values(worst)) worst = j;
    }
    if (!(fit.p_values(worst) > selection.threshold)) return detail::to_linear_model(fit, names);
    active.erase(active.begin() + worst);
  }
}

using FeatureVector = std::map<std::string, double>;

/// a + sum coef * feature over selected_features, in that order.
inline double predict_lr(const LinearModel& model, const FeatureVector& features) {
  double y = model.intercept;
  for (const auto& name : model.selected_features) {
    auto it = features.find(name);
    if (it == features.end()) throw Error("missing feature '" + name + "'");
    y += model.coefficients.at(name) * it->second;
  }
  return y;
}

inline std::vector<double> predict_lr(const LinearModel& model, const FeatureMatrix& m) {
  std::vector<double> out;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    FeatureVector fv;
    for (std::size_t c = 0; c < m.cols(); ++c) fv[m.columns[c]] = m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    out.push_back(predict_lr(model, fv));
  }
  return out;
}

}  // namespace aspectcast
