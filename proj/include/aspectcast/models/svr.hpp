#pragma once

// nu-support vector regression with an RBF kernel, solved in the dual by
// two-coordinate (SMO) ascent.
//
// Dual over beta = alpha - alpha*:
//   maximize   y^T beta - 1/2 beta^T K beta
//   subject to sum(alpha) = sum(alpha*) = C * nu / 2,  0 <= alpha, alpha* <= C / n
// Prediction is f(x) = sum_i beta_i k(x_i, x) + b.
//
// The solver works on the 2n stacked variables a = [alpha; alpha*] with labels
// +1 / -1, minimizing 1/2 a^T Q a + p^T a where Q_ij = s_i s_j K_ij and
// p = [-y; y]. Pairs are chosen within one label group (maximal violating pair
// with second-order gain), which keeps both group sums fixed.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aspectcast/error.hpp"
#include "aspectcast/features.hpp"

namespace aspectcast {

struct SvrSpec {
  double gamma = 1.0;
  double nu = 0.5;
  double C = 1.0;
  double tolerance = 1e-3;
  long max_iterations = 1'000'000;
};

/// exp(-gamma * ||u - v||^2)
inline double rbf_kernel(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v,
                         double gamma) {
  return std::exp(-gamma * (u - v).squaredNorm());
}

inline Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& X, double gamma) {
  const auto n = X.rows();
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) K(i, j) = K(j, i) = rbf_kernel(X.row(i).transpose(), X.row(j).transpose(), gamma);
  }
  return K;
}

struct NuSvrSolution {
  Eigen::VectorXd alpha;       // length n
  Eigen::VectorXd alpha_star;  // length n
  Eigen::VectorXd beta;        // alpha - alpha*
  double bias = 0.0;           // b in f(x) = sum beta_i k(x_i, x) + b
  double epsilon = 0.0;        // tube width implied by nu
  double kkt_violation = 0.0;  // max violating-pair gap at exit
  long iterations = 0;
};

/// Dual objective y^T beta - 1/2 beta^T K beta.
inline double nu_svr_dual_objective(const Eigen::MatrixXd& K, const Eigen::VectorXd& y, const Eigen::VectorXd& beta) {
  return y.dot(beta) - 0.5 * beta.dot(K * beta);
}

namespace detail {

class NuSolver {
 public:
  NuSolver(const Eigen::MatrixXd& K, const Eigen::VectorXd& y, double upper)
      : K_(K), l_(K.rows()), upper_(upper), a_(2 * l_), sign_(2 * l_), grad_(2 * l_), p_(2 * l_) {
    for (Eigen::Index i = 0; i < l_; ++i) {
      sign_(i) = 1.0;
      sign_(i + l_) = -1.0;
      p_(i) = -y(i);
      p_(i + l_) = y(i);
    }
  }

  double q(Eigen::Index i, Eigen::Index j) const { return sign_(i) * sign_(j) * K_(i % l_, j % l_); }

  void initialize(double group_sum) {
    double remaining = group_sum;
    for (Eigen::Index i = 0; i < l_; ++i) {
      a_(i) = a_(i + l_) = std::min(remaining, upper_);
      remaining -= a_(i);
    }
    if (remaining > 1e-12 * std::max(1.0, group_sum)) throw Error("nu-SVR: infeasible (C * nu / 2 exceeds n * C / n)");
    for (Eigen::Index t = 0; t < 2 * l_; ++t) {
      double g = p_(t);
      for (Eigen::Index s = 0; s < 2 * l_; ++s) {
        if (a_(s) != 0.0) g += q(t, s) * a_(s);
      }
      grad_(t) = g;
    }
  }

  bool at_upper(Eigen::Index t) const { return a_(t) >= upper_; }
  bool at_lower(Eigen::Index t) const { return a_(t) <= 0.0; }

  // Returns the KKT gap and fills i, j (j < 0 when nothing to do).
  double select(Eigen::Index& out_i, Eigen::Index& out_j) const {
    constexpr double kTau = 1e-12;
    const double inf = std::numeric_limits<double>::infinity();
    double gmax_p = -inf, gmax_n = -inf;
    Eigen::Index ip = -1, in = -1;
    for (Eigen::Index t = 0; t < 2 * l_; ++t) {
      if (sign_(t) > 0) {
        if (!at_upper(t) && -grad_(t) >= gmax_p) {
          gmax_p = -grad_(t);
          ip = t;
        }
      } else if (!at_lower(t) && grad_(t) >= gmax_n) {
        gmax_n = grad_(t);
        in = t;
      }
    }
    double gmax_p2 = -inf, gmax_n2 = -inf;
    double best_obj = inf;
    Eigen::Index best_j = -1;
    for (Eigen::Index j = 0; j < 2 * l_; ++j) {
      if (sign_(j) > 0) {
        if (at_lower(j)) continue;
        const double diff = gmax_p + grad_(j);
        gmax_p2 = std::max(gmax_p2, grad_(j));
        if (ip >= 0 && diff > 0) {
          double quad = q(ip, ip) + q(j, j) - 2.0 * q(ip, j);
          if (quad <= 0) quad = kTau;
          const double obj = -(diff * diff) / quad;
          if (obj <= best_obj) {
            best_obj = obj;
            best_j = j;
          }
        }
      } else {
        if (at_upper(j)) continue;
        const double diff = gmax_n - grad_(j);
        gmax_n2 = std::max(gmax_n2, -grad_(j));
        if (in >= 0 && diff > 0) {
          double quad = q(in, in) + q(j, j) - 2.0 * q(in, j);
          if (quad <= 0) quad = kTau;
          const double obj = -(diff * diff) / quad;
          if (obj <= best_obj) {
            best_obj = obj;
            best_j = j;
          }
        }
      }
    }
    const double gap = std::max(gmax_p + gmax_p2, gmax_n + gmax_n2);
    out_j = best_j;
    out_i = best_j < 0 ? -1 : (sign_(best_j) > 0 ? ip : in);
    return std::isfinite(gap) ? std::max(gap, 0.0) : 0.0;
  }

  // Two-variable update for a same-label pair; the pair sum is preserved.
  void update(Eigen::Index i, Eigen::Index j) {
    constexpr double kTau = 1e-12;
    const double old_i = a_(i);
    const double old_j = a_(j);
    double quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
    if (quad <= 0) quad = kTau;
    const double delta = (grad_(i) - grad_(j)) / quad;
    const double sum = old_i + old_j;
    double ai = old_i - delta;
    double aj = old_j + delta;
    if (sum > upper_) {
      if (ai > upper_) {
        ai = upper_;
        aj = sum - upper_;
      }
    } else if (aj < 0) {
      aj = 0;
      ai = sum;
    }
    if (sum > upper_) {
      if (aj > upper_) {
        aj = upper_;
        ai = sum - upper_;
      }
    } else if (ai < 0) {
      ai = 0;
      aj = sum;
    }
    a_(i) = ai;
    a_(j) = aj;
    const double di = ai - old_i;
    const double dj = aj - old_j;
    for (Eigen::Index t = 0; t < 2 * l_; ++t) grad_(t) += q(t, i) * di + q(t, j) * dj;
  }

  // Offsets of the two label groups from free-variable gradients (or the
  // midpoint of the feasible interval when a group has no free variable).
  std::pair<double, double> group_offsets() const {
    double r[2];
    for (int g = 0; g < 2; ++g) {
      const double s = g == 0 ? 1.0 : -1.0;
      double ub = std::numeric_limits<double>::infinity();
      double lb = -std::numeric_limits<double>::infinity();
      double sum_free = 0.0;
      int n_free = 0;
      for (Eigen::Index t = 0; t < 2 * l_; ++t) {
        if (sign_(t) != s) continue;
        if (at_upper(t)) lb = std::max(lb, grad_(t));
        else if (at_lower(t)) ub = std::min(ub, grad_(t));
        else {
          ++n_free;
          sum_free += grad_(t);
        }
      }
      r[g] = n_free > 0 ? sum_free / n_free : (ub + lb) / 2.0;
    }
    return {r[0], r[1]};
  }

  const Eigen::VectorXd& a() const { return a_; }
  Eigen::Index l() const { return l_; }

 private:
  const Eigen::MatrixXd& K_;
  Eigen::Index l_;
  double upper_;
  Eigen::VectorXd a_, sign_, grad_, p_;
};

}  // namespace detail

/// Solves the nu-SVR dual for a precomputed kernel matrix.
inline NuSvrSolution solve_nu_svr(const Eigen::MatrixXd& K, const Eigen::VectorXd& y, double nu, double C,
                                  double tolerance = 1e-3, long max_iterations = 1'000'000) {
  const auto n = K.rows();
  if (n < 2 || K.cols() != n || y.size() != n) throw Error("nu-SVR needs a square kernel over at least 2 samples");
  if (!(nu > 0.0 && nu <= 1.0)) throw Error("nu must be in (0, 1]");
  if (!(C > 0.0)) throw Error("C must be positive");

  const double upper = C / static_cast<double>(n);
  detail::NuSolver solver(K, y, upper);
  solver.initialize(C * nu / 2.0);

  NuSvrSolution sol;
  for (;;) {
    Eigen::Index i = -1, j = -1;
    sol.kkt_violation = solver.select(i, j);
    if (sol.kkt_violation < tolerance || j < 0) break;
    if (sol.iterations >= max_iterations) {
      throw Error("nu-SVR did not converge after " + std::to_string(max_iterations) +
                  " iterations; KKT violation " + std::to_string(sol.kkt_violation));
    }
    solver.update(i, j);
    ++sol.iterations;
  }

  const auto& a = solver.a();
  sol.alpha = a.head(n);
  sol.alpha_star = a.tail(n);
  sol.beta = sol.alpha - sol.alpha_star;
  const auto [r1, r2] = solver.group_offsets();
  // decision = sum beta k - rho with rho = (r1 - r2) / 2
  sol.bias = -(r1 - r2) / 2.0;
  sol.epsilon = -(r1 + r2) / 2.0;
  return sol;
}

struct SvrModel {
  std::vector<std::string> features;
  double gamma = 1.0;
  double nu = 0.5;
  double C = 1.0;
  std::size_t n_train = 0;
  Eigen::MatrixXd support_vectors;  // rows with non-zero coefficient
  Eigen::VectorXd coefficients;     // beta for each support vector
  double bias = 0.0;
  double epsilon = 0.0;
  double kkt_violation = 0.0;
  long iterations = 0;
};

inline SvrModel fit_nusvr(const FeatureMatrix& train, const SvrSpec& spec) {
  if (!(spec.gamma > 0.0)) throw Error("gamma must be positive");
  if (train.rows() < 2) throw Error("nu-SVR needs at least 2 training rows");
  const Eigen::MatrixXd K = rbf_gram(train.values, spec.gamma);
  const auto sol = solve_nu_svr(K, train.target, spec.nu, spec.C, spec.tolerance, spec.max_iterations);

  SvrModel m;
  m.features = train.columns;
  m.gamma = spec.gamma;
  m.nu = spec.nu;
  m.C = spec.C;
  m.n_train = train.rows();
  m.bias = sol.bias;
  m.epsilon = sol.epsilon;
  m.kkt_violation = sol.kkt_violation;
  m.iterations = sol.iterations;
  std::vector<Eigen::Index> sv;
  for (Eigen::Index i = 0; i < sol.beta.size(); ++i) {
    if (sol.beta(i) != 0.0) sv.push_back(i);
  }
  m.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), train.values.cols());
  m.coefficients.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t k = 0; k < sv.size(); ++k) {
    m.support_vectors.row(static_cast<Eigen::Index>(k)) = train.values.row(sv[k]);
    m.coefficients(static_cast<Eigen::Index>(k)) = sol.beta(sv[k]);
  }
  return m;
}

inline double predict_nusvr(const SvrModel& m, const Eigen::Ref<const Eigen::VectorXd>& x) {
  double f = m.bias;
  for (Eigen::Index i = 0; i < m.support_vectors.rows(); ++i) {
    f += m.coefficients(i) * rbf_kernel(m.support_vectors.row(i).transpose(), x, m.gamma);
  }
  return f;
}

inline std::vector<double> predict_nusvr(const SvrModel& m, const FeatureMatrix& data) {
  const auto X = data.select_columns(m.features).values;
  std::vector<double> out;
  for (Eigen::Index r = 0; r < X.rows(); ++r) out.push_back(predict_nusvr(m, X.row(r).transpose()));
  return out;
}

}  // namespace aspectcast
