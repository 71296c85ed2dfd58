#pragma once

// Levenberg-Marquardt for nonlinear least squares.
//
// The objective is E(p) = 1/2 * sum r_i(p)^2. One step solves
// (J^T J + lambda I) delta = -J^T r and accepts p + delta only if E decreases;
// lambda is divided by 10 on acceptance and multiplied by 10 on rejection.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aspectcast/error.hpp"

namespace aspectcast {

/// Residual map with an analytic Jacobian (rows = residuals, cols = params).
template <class P>
concept LeastSquaresProblem = requires(const P& p, const Eigen::VectorXd& x) {
  { p.residuals(x) } -> std::convertible_to<Eigen::VectorXd>;
  { p.jacobian(x) } -> std::convertible_to<Eigen::MatrixXd>;
};

struct LmOptions {
  double lambda_min = 1e-15;
  double lambda_max = 1e10;
};

enum class LmStatus { accepted, rejected, stationary };

struct LmStep {
  Eigen::VectorXd params;  // new parameters (unchanged unless accepted)
  Eigen::VectorXd delta;   // attempted step
  double lambda = 0.0;     // damping for the next step
  double error = 0.0;      // objective at `params`
  LmStatus status = LmStatus::rejected;
};

inline double half_sse(const Eigen::VectorXd& r) { return 0.5 * r.squaredNorm(); }

template <LeastSquaresProblem Problem>
LmStep lm_step(const Eigen::VectorXd& params, const Problem& problem, double lambda, const LmOptions& opt = {}) {
  if (!(lambda > 0.0)) throw Error("LM damping must be positive");
  const Eigen::VectorXd r = problem.residuals(params);
  const double e0 = half_sse(r);
  if (!std::isfinite(e0)) throw Error("residuals are not finite at the current parameters");

  LmStep out{params, Eigen::VectorXd::Zero(params.size()), lambda, e0, LmStatus::stationary};
  const Eigen::MatrixXd J = problem.jacobian(params);
  const Eigen::VectorXd g = J.transpose() * r;
  if (e0 == 0.0 || g.lpNorm<Eigen::Infinity>() == 0.0) return out;

  const Eigen::MatrixXd JtJ = J.transpose() * J;
  for (;;) {
    Eigen::MatrixXd A = JtJ;
    A.diagonal().array() += lambda;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    Eigen::VectorXd delta;
    bool ok = ldlt.info() == Eigen::Success && ldlt.isPositive();
    if (ok) {
      delta = ldlt.solve(-g);
      ok = delta.allFinite() && (A * delta + g).norm() <= 1e-6 * (g.norm() + 1.0);
    }
    if (ok) {
      out.delta = delta;
      break;
    }
    lambda *= 10.0;
    if (lambda > opt.lambda_max) throw Error("optimizer stalled: damped normal matrix singular up to lambda_max");
  }

  const Eigen::VectorXd candidate = params + out.delta;
  const double e1 = half_sse(problem.residuals(candidate));
  if (std::isfinite(e1) && e1 < e0) {
    out.params = candidate;
    out.error = e1;
    out.lambda = std::max(lambda / 10.0, opt.lambda_min);
    out.status = LmStatus::accepted;
  } else {
    out.lambda = lambda * 10.0;
    out.status = LmStatus::rejected;
  }
  return out;
}

struct LmRun {
  Eigen::VectorXd params;
  double error = 0.0;
  double lambda = 0.0;
  std::size_t accepted_steps = 0;
  std::vector<double> accepted_errors;  // objective after each accepted step
};

/// Repeats lm_step until `max_steps` attempts, a stationary point, lambda
/// passing lambda_max, or a relative decrease below `ftol`.
template <LeastSquaresProblem Problem>
LmRun lm_minimize(Eigen::VectorXd params, const Problem& problem, double lambda0, std::size_t max_steps,
                  double ftol = 1e-14, const LmOptions& opt = {}) {
  LmRun run;
  run.params = std::move(params);
  run.lambda = lambda0;
  run.error = half_sse(problem.residuals(run.params));
  for (std::size_t i = 0; i < max_steps; ++i) {
    const auto step = lm_step(run.params, problem, run.lambda, opt);
    run.lambda = step.lambda;
    if (step.status == LmStatus::stationary) break;
    if (step.status == LmStatus::rejected) {
      if (run.lambda > opt.lambda_max) break;
      continue;
    }
    const double previous = run.error;
    run.params = step.params;
    run.error = step.error;
    ++run.accepted_steps;
    run.accepted_errors.push_back(step.error);
    if (previous - step.error <= ftol * previous) break;
  }
  return run;
}

}  // namespace aspectcast
