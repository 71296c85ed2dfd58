#include <cmath>
#include <random>

#include "aspectcast/models/svr.hpp"
#include "test_util.hpp"

using namespace aspectcast;

namespace {

// Euclidean projection of v onto {0 <= x <= upper, sum x = total} by bisection.
Eigen::VectorXd project(const Eigen::VectorXd& v, double upper, double total) {
  double lo = v.minCoeff() - upper - 1.0, hi = v.maxCoeff() + 1.0;
  auto sum_at = [&](double tau) { return (v.array() - tau).max(0.0).min(upper).sum(); };
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (sum_at(mid) > total ? lo : hi) = mid;
  }
  return (v.array() - 0.5 * (lo + hi)).max(0.0).min(upper);
}

// Accelerated projected gradient on the nu-SVR dual in (alpha, alpha*).
// Equality constraints split into sum alpha = sum alpha* = C nu / 2.
Eigen::VectorXd oracle_beta(const Eigen::MatrixXd& K, const Eigen::VectorXd& y, double nu, double C) {
  const auto n = K.rows();
  const double upper = C / static_cast<double>(n), half = C * nu / 2.0;
  const double L = 2.0 * Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(K).eigenvalues().maxCoeff();
  Eigen::VectorXd a = project(Eigen::VectorXd::Zero(n), upper, half);
  Eigen::VectorXd s = a, as = a, ss = a;
  double t = 1.0;
  for (int it = 0; it < 200000; ++it) {
    const Eigen::VectorXd g = K * (a - as) - y;  // gradient wrt alpha; minus for alpha*
    const Eigen::VectorXd a_next = project(s - g / L, upper, half);
    const Eigen::VectorXd as_next = project(ss + g / L, upper, half);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    s = a_next + ((t - 1.0) / t_next) * (a_next - a);
    ss = as_next + ((t - 1.0) / t_next) * (as_next - as);
    if ((a_next - a).norm() + (as_next - as).norm() < 1e-15) {
      a = a_next;
      as = as_next;
      break;
    }
    a = a_next;
    as = as_next;
    t = t_next;
  }
  return a - as;
}

struct Instance {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

Instance five_points() {
  Instance in{Eigen::MatrixXd(5, 1), Eigen::VectorXd(5)};
  in.X << 0, 1, 2, 3, 4;
  in.y << 0.10, 0.32, 0.18, 0.40, 0.25;
  return in;
}

Instance random_instance(std::mt19937_64& g, Eigen::Index n, Eigen::Index d) {
  std::normal_distribution<double> z;
  Instance in{Eigen::MatrixXd(n, d), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < in.X.size(); ++i) in.X.data()[i] = z(g);
  for (Eigen::Index i = 0; i < n; ++i) in.y(i) = 0.1 * z(g);
  return in;
}

FeatureMatrix as_matrix(const Instance& in) {
  FeatureMatrix m;
  Quarter q(2000, 1);
  for (Eigen::Index i = 0; i < in.X.rows(); ++i, q = q.next()) m.quarters.push_back(q);
  for (Eigen::Index j = 0; j < in.X.cols(); ++j) m.columns.push_back("f" + std::to_string(j));
  m.values = in.X;
  m.target = in.y;
  return m;
}

}  // namespace

TEST(Rbf, KernelValues) {
  const Eigen::Vector2d u(1.0, 2.0), v(0.0, 0.0);
  EXPECT_DOUBLE_EQ(rbf_kernel(u, u, 3.0), 1.0);
  EXPECT_NEAR(rbf_kernel(u, v, 0.5), std::exp(-2.5), 1e-15);
}

TEST(NuSvr, MatchesProjectedGradientOracle) {
  const auto in = five_points();
  const Eigen::MatrixXd K = rbf_gram(in.X, 0.5);
  const auto sol = solve_nu_svr(K, in.y, 0.5, 1.0, 1e-10);
  const Eigen::VectorXd beta = oracle_beta(K, in.y, 0.5, 1.0);
  EXPECT_NEAR(nu_svr_dual_objective(K, in.y, sol.beta), nu_svr_dual_objective(K, in.y, beta), 1e-9);
  EXPECT_LT((sol.beta - beta).lpNorm<Eigen::Infinity>(), 1e-5);
}

TEST(NuSvr, MatchesOracleOnRandomInstances) {
  std::mt19937_64 g(12);
  for (int trial = 0; trial < 5; ++trial) {
    const auto in = random_instance(g, 12, 3);
    for (double gamma : {0.1, 1.0}) {
      const Eigen::MatrixXd K = rbf_gram(in.X, gamma);
      const auto sol = solve_nu_svr(K, in.y, 0.5, 1.0, 1e-10);
      const Eigen::VectorXd beta = oracle_beta(K, in.y, 0.5, 1.0);
      EXPECT_NEAR(nu_svr_dual_objective(K, in.y, sol.beta), nu_svr_dual_objective(K, in.y, beta), 1e-8);
    }
  }
}

TEST(NuSvr, ConstraintsAndKkt) {
  std::mt19937_64 g(13);
  for (int trial = 0; trial < 30; ++trial) {
    const auto in = random_instance(g, 5 + static_cast<Eigen::Index>(g() % 15), 2);
    const double nu = 0.2 + 0.7 * static_cast<double>(g() % 100) / 100.0;
    const double C = 0.5 + static_cast<double>(g() % 5);
    const Eigen::MatrixXd K = rbf_gram(in.X, 0.5);
    const auto sol = solve_nu_svr(K, in.y, nu, C, 1e-9);
    const double upper = C / static_cast<double>(in.y.size());
    EXPECT_NEAR(sol.beta.sum(), 0.0, 1e-10);
    EXPECT_NEAR(sol.alpha.sum() + sol.alpha_star.sum(), C * nu, 1e-10);
    EXPECT_GE(sol.alpha.minCoeff(), 0.0);
    EXPECT_GE(sol.alpha_star.minCoeff(), 0.0);
    EXPECT_LE(sol.alpha.maxCoeff(), upper + 1e-12);
    EXPECT_LE(sol.alpha_star.maxCoeff(), upper + 1e-12);
    EXPECT_LT(sol.kkt_violation, 1e-9);
    // free multipliers sit exactly on the tube edge
    const Eigen::VectorXd f = K * sol.beta;
    for (Eigen::Index i = 0; i < in.y.size(); ++i) {
      if (sol.alpha(i) > 1e-9 && sol.alpha(i) < upper - 1e-9) {
        EXPECT_NEAR(in.y(i) - f(i) - sol.bias, sol.epsilon, 1e-7);
      }
      if (sol.alpha_star(i) > 1e-9 && sol.alpha_star(i) < upper - 1e-9) {
        EXPECT_NEAR(f(i) + sol.bias - in.y(i), sol.epsilon, 1e-7);
      }
    }
    EXPECT_GE(sol.epsilon, -1e-9);
  }
}

TEST(NuSvr, ConstantTargetsGiveConstantPredictor) {
  std::mt19937_64 g(14);
  auto in = random_instance(g, 10, 2);
  in.y.setConstant(0.042);
  const auto m = fit_nusvr(as_matrix(in), SvrSpec{0.7});
  for (double p : predict_nusvr(m, as_matrix(random_instance(g, 6, 2)))) EXPECT_NEAR(p, 0.042, 1e-6);
}

TEST(NuSvr, IdenticalPointsPredictMedianLikeValue) {
  Instance in{Eigen::MatrixXd::Zero(4, 1), Eigen::VectorXd(4)};
  in.y << 0.1, 0.2, 0.3, 0.4;
  const auto m = fit_nusvr(as_matrix(in), SvrSpec{1.0});
  const double p = predict_nusvr(m, Eigen::VectorXd::Zero(1));
  EXPECT_GE(p, 0.1 - 1e-9);
  EXPECT_LE(p, 0.4 + 1e-9);
}

TEST(NuSvr, TranslationCovariance) {
  std::mt19937_64 g(15);
  const auto in = random_instance(g, 12, 2);
  auto shifted = in;
  shifted.y.array() += 5.0;
  SvrSpec spec{0.5};
  spec.tolerance = 1e-10;
  const auto a = fit_nusvr(as_matrix(in), spec);
  const auto b = fit_nusvr(as_matrix(shifted), spec);
  const auto probe = as_matrix(random_instance(g, 8, 2));
  const auto pa = predict_nusvr(a, probe), pb = predict_nusvr(b, probe);
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_NEAR(pb[i], pa[i] + 5.0, 1e-6);
}

TEST(NuSvr, InvalidParameters) {
  const auto m = as_matrix(five_points());
  EXPECT_THROW(fit_nusvr(m, SvrSpec{0.0}), Error);
  EXPECT_THROW(fit_nusvr(m, SvrSpec{1.0, 0.0}), Error);
  EXPECT_THROW(fit_nusvr(m, SvrSpec{1.0, 0.5, -1.0}), Error);
  EXPECT_THROW(fit_nusvr(m.slice(0, 1), SvrSpec{}), Error);
}
