#include <cmath>

#include "aspectcast/models/lm.hpp"
#include "test_util.hpp"

using namespace aspectcast;

namespace {

// r(x) = A x - b
struct Linear {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::VectorXd residuals(const Eigen::VectorXd& x) const { return A * x - b; }
  Eigen::MatrixXd jacobian(const Eigen::VectorXd&) const { return A; }
};

struct Rosenbrock {
  Eigen::VectorXd residuals(const Eigen::VectorXd& x) const {
    Eigen::VectorXd r(2);
    r << 10.0 * (x(1) - x(0) * x(0)), 1.0 - x(0);
    return r;
  }
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd J(2, 2);
    J << -20.0 * x(0), 10.0, -1.0, 0.0;
    return J;
  }
};

Linear small_linear() {
  Linear p{Eigen::MatrixXd(3, 2), Eigen::VectorXd(3)};
  p.A << 1, 2, 3, 4, 5, 7;
  p.b << 1, -1, 2;
  return p;
}

}  // namespace

TEST(LmStep, LinearMatchesDampedNormalEquations) {
  const auto p = small_linear();
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(2);
  const double lambda = 1e-3;
  const auto step = lm_step(x0, p, lambda);
  ASSERT_EQ(step.status, LmStatus::accepted);
  // closed form: (A^T A + lambda I) delta = -A^T r
  const Eigen::MatrixXd M = p.A.transpose() * p.A + lambda * Eigen::MatrixXd::Identity(2, 2);
  const Eigen::VectorXd expected = M.inverse() * (-(p.A.transpose() * p.residuals(x0)));
  EXPECT_LT((step.delta - expected).norm(), 1e-10);
  EXPECT_NEAR(step.lambda, lambda / 10.0, 1e-18);
}

TEST(LmStep, TinyDampingReachesLeastSquares) {
  const auto p = small_linear();
  const auto run = lm_minimize(Eigen::VectorXd::Zero(2), p, 1e-12, 5);
  const Eigen::VectorXd ls = (p.A.transpose() * p.A).inverse() * p.A.transpose() * p.b;
  EXPECT_LT((run.params - ls).norm(), 1e-8);
}

TEST(LmStep, StationaryPointIsUnchanged) {
  const auto p = small_linear();
  const Eigen::VectorXd ls = (p.A.transpose() * p.A).inverse() * p.A.transpose() * p.b;
  const auto step = lm_step(ls, p, 1.0);
  // gradient is zero up to rounding, so nothing moves beyond that
  EXPECT_LT((step.params - ls).norm(), 1e-12);
  EXPECT_LE(step.error, half_sse(p.residuals(ls)));
}

TEST(LmStep, RejectionRaisesDamping) {
  Linear p{Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Constant(1, 1.0)};
  const auto ok = lm_step(Eigen::VectorXd::Zero(1), p, 1.0);
  EXPECT_EQ(ok.status, LmStatus::accepted);
  EXPECT_NEAR(ok.params(0), 0.5, 1e-15);  // delta = 1 / (1 + 1)
  EXPECT_THROW(lm_step(Eigen::VectorXd::Zero(1), p, 0.0), Error);
}

TEST(LmMinimize, RosenbrockErrorNeverIncreases) {
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  const auto run = lm_minimize(x0, Rosenbrock{}, 1e-3, 500, 0.0);
  ASSERT_FALSE(run.accepted_errors.empty());
  double prev = half_sse(Rosenbrock{}.residuals(x0));
  for (double e : run.accepted_errors) {
    EXPECT_LE(e, prev);
    prev = e;
  }
  EXPECT_NEAR(run.params(0), 1.0, 1e-6);
  EXPECT_NEAR(run.params(1), 1.0, 1e-6);
}

TEST(LmMinimize, ZeroStepsKeepsStart) {
  Eigen::VectorXd x0(2);
  x0 << 3.0, 4.0;
  const auto run = lm_minimize(x0, Rosenbrock{}, 1e-3, 0);
  EXPECT_EQ(run.params, x0);
  EXPECT_EQ(run.accepted_steps, 0u);
}
