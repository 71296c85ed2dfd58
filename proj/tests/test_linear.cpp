#include <cmath>
#include <random>

#include "aspectcast/models/forecaster.hpp"
#include "aspectcast/models/linear.hpp"
#include "aspectcast/text.hpp"
#include "test_util.hpp"

using namespace aspectcast;
using testutil::throws_with;

namespace {

FeatureMatrix matrix(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::vector<std::string> names) {
  FeatureMatrix m;
  Quarter q(2010, 1);
  for (Eigen::Index i = 0; i < X.rows(); ++i, q = q.next()) m.quarters.push_back(q);
  m.columns = std::move(names);
  m.values = X;
  m.target = y;
  return m;
}

// Normal equations solved by LDLT: an independent route from the QR fit.
Eigen::VectorXd normal_equations(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Eigen::MatrixXd D(X.rows(), X.cols() + 1);
  D.col(0).setOnes();
  D.rightCols(X.cols()) = X;
  return (D.transpose() * D).ldlt().solve(D.transpose() * y);
}

}  // namespace

TEST(Ols, NoiselessLine) {
  Eigen::MatrixXd X(4, 1);
  X << 0, 1, 2, 3;
  Eigen::VectorXd y(4);
  y << 0.5, 2.5, 4.5, 6.5;
  const auto m = fit_lr(matrix(X, y, {"x"}));
  EXPECT_NEAR(m.intercept, 0.5, 1e-10);
  EXPECT_NEAR(m.coefficients.at("x"), 2.0, 1e-10);
}

TEST(Ols, ConstantTarget) {
  std::mt19937_64 g(2);
  std::normal_distribution<double> n;
  Eigen::MatrixXd X(10, 3);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = n(g);
  const auto m = fit_lr(matrix(X, Eigen::VectorXd::Constant(10, 0.07), {"a", "b", "c"}));
  EXPECT_NEAR(m.intercept, 0.07, 1e-12);
  for (const auto& [k, v] : m.coefficients) EXPECT_NEAR(v, 0.0, 1e-12) << k;
}

TEST(Ols, MatchesNormalEquationsAndResidualsAreOrthogonal) {
  std::mt19937_64 g(4);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index rows = 8 + static_cast<Eigen::Index>(g() % 10);
    const Eigen::Index k = 1 + static_cast<Eigen::Index>(g() % 5);
    Eigen::MatrixXd X(rows, k);
    Eigen::VectorXd y(rows);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = n(g);
    for (Eigen::Index i = 0; i < rows; ++i) y(i) = n(g);
    std::vector<std::string> names;
    for (Eigen::Index j = 0; j < k; ++j) names.push_back("f" + std::to_string(j));
    const auto fit = ols(X, y, names);
    const Eigen::VectorXd beta = normal_equations(X, y);
    EXPECT_NEAR(fit.intercept, beta(0), 1e-9);
    for (Eigen::Index j = 0; j < k; ++j) EXPECT_NEAR(fit.coefficients(j), beta(j + 1), 1e-9);
    EXPECT_NEAR(fit.residuals.sum(), 0.0, 1e-9);
    for (Eigen::Index j = 0; j < k; ++j) EXPECT_NEAR(fit.residuals.dot(X.col(j)), 0.0, 1e-9);
  }
}

TEST(Ols, PValueTwoDegreesOfFreedom) {
  // Simple regression on 4 rows: t with 2 dof has two-sided p = 1 - t / sqrt(t^2 + 2).
  Eigen::MatrixXd X(4, 1);
  X << 1, 2, 3, 4;
  Eigen::VectorXd y(4);
  y << 1.0, 2.5, 2.0, 4.5;
  const auto fit = ols(X, y, {"x"});
  const double xbar = 2.5;
  double sxx = 0.0;
  for (int i = 0; i < 4; ++i) sxx += (X(i, 0) - xbar) * (X(i, 0) - xbar);
  const double se = std::sqrt(fit.rss / 2.0 / sxx);
  const double t = fit.coefficients(0) / se;
  EXPECT_EQ(fit.dof, 2);
  EXPECT_NEAR(fit.p_values(0), 1.0 - t / std::sqrt(t * t + 2.0), 1e-12);
}

TEST(Ols, CollinearColumnsNamed) {
  Eigen::MatrixXd X(6, 2);
  X << 1, 2, 2, 4, 3, 6, 4, 8, 5, 10, 6, 12;
  Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(6, 0.0, 1.0);
  try {
    ols(X, y, {"a", "b"});
    FAIL() << "expected collinearity error";
  } catch (const CollinearityError& e) {
    EXPECT_FALSE(e.columns().empty());
    const std::string what = e.what();
    EXPECT_TRUE(what.find('a') != std::string::npos || what.find('b') != std::string::npos) << what;
  }
  EXPECT_THROW(ols(Eigen::MatrixXd::Zero(2, 3), Eigen::VectorXd::Zero(2), {"a", "b", "c"}), Error);
}

TEST(Stepwise, DropsNoiseKeepsSignal) {
  std::mt19937_64 g(8);
  std::normal_distribution<double> n;
  Eigen::MatrixXd X(30, 4);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = n(g);
  Eigen::VectorXd y = 0.1 + 0.8 * X.col(0).array() - 0.5 * X.col(2).array();
  for (Eigen::Index i = 0; i < 30; ++i) y(i) += 0.01 * n(g);
  LinearSelection sel{LinearSelection::Kind::backward_stepwise, 0.3};
  const auto m = fit_lr(matrix(X, y, {"s1", "n1", "s2", "n2"}), sel);
  EXPECT_TRUE(m.coefficients.count("s1"));
  EXPECT_TRUE(m.coefficients.count("s2"));
  EXPECT_NEAR(m.coefficients.at("s1"), 0.8, 0.02);
  // every survivor passes the threshold on the final fit
  std::vector<std::string> names = m.selected_features;
  Eigen::MatrixXd Xs(30, static_cast<Eigen::Index>(names.size()));
  const std::vector<std::string> all = {"s1", "n1", "s2", "n2"};
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto idx = std::find(all.begin(), all.end(), names[j]) - all.begin();
    Xs.col(static_cast<Eigen::Index>(j)) = X.col(idx);
  }
  const auto fit = ols(Xs, y, names);
  for (Eigen::Index j = 0; j < fit.p_values.size(); ++j) EXPECT_LE(fit.p_values(j), 0.3);
}

TEST(Stepwise, MoreFeaturesThanRows) {
  std::mt19937_64 g(9);
  std::normal_distribution<double> n;
  Eigen::MatrixXd X(9, 16);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = n(g);
  Eigen::VectorXd y(9);
  for (Eigen::Index i = 0; i < 9; ++i) y(i) = n(g);
  std::vector<std::string> names;
  for (int j = 0; j < 16; ++j) names.push_back("f" + std::to_string(j));
  const auto m = fit_lr(matrix(X, y, names), {LinearSelection::Kind::backward_stepwise, 0.3});
  EXPECT_LE(m.selected_features.size(), 7u);
  EXPECT_TRUE(std::isfinite(m.intercept));
}

TEST(ReferenceModel, SixteenAspectExample) {
  const auto f = forecaster_from_json(nlohmann::json::parse(
      text::read_file((testutil::data_dir() / "reference_models" / "lr16.json").string())));
  const auto& m = std::get<LinearModel>(f.model);
  FeatureVector zeros;
  for (const auto& id : aspect_set(16)) zeros[id] = 0.0;
  EXPECT_NEAR(predict_lr(m, zeros), 0.515, 1e-12);
  auto cost = zeros;
  cost["cost_savings"] = 1.0;
  EXPECT_NEAR(predict_lr(m, cost), 0.569, 1e-12);
  zeros.erase("security_concerns");
  EXPECT_TRUE(throws_with([&] { predict_lr(m, zeros); }, "security_concerns"));
}

TEST(ReferenceModel, ThirteenAspectExample) {
  const auto f = forecaster_from_json(nlohmann::json::parse(
      text::read_file((testutil::data_dir() / "reference_models" / "lr13.json").string())));
  const auto& m = std::get<LinearModel>(f.model);
  EXPECT_EQ(m.selected_features.size(), 7u);
  FeatureVector ones;
  for (const auto& id : aspect_set(13)) ones[id] = 1.0;
  EXPECT_NEAR(predict_lr(m, ones), 0.519 - 0.151 - 0.069 + 0.075 - 0.138 - 0.113 - 0.156 + 0.042, 1e-12);
}

TEST(Predict, EmptyModelIsIntercept) {
  LinearModel m;
  m.intercept = 0.3;
  EXPECT_DOUBLE_EQ(predict_lr(m, FeatureVector{}), 0.3);
  EXPECT_DOUBLE_EQ(predict_lr(m, FeatureVector{{"x", 9.0}}), 0.3);
}
