#pragma once

// Single-hidden-layer perceptron with sigmoid units, trained by
// Levenberg-Marquardt on half the sum of squared errors with early stopping on
// a validation subset.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aspectcast/error.hpp"
#include "aspectcast/features.hpp"
#include "aspectcast/models/lm.hpp"
#include "aspectcast/random.hpp"

namespace aspectcast {

struct MlpSpec {
  int hidden = 10;
  int max_epochs = 100;
  double lambda0 = 1e-3;
  int patience = 6;
};

struct MlpEpoch {
  int epoch = 0;
  double train_error = 0.0;
  double validation_error = 0.0;
  double test_error = 0.0;
};

inline double sigmoid(double s) { return 1.0 / (1.0 + std::exp(-s)); }

/// Network weights. Parameter vector layout: input weights (row-major,
/// hidden x inputs), hidden biases, output weights, output bias.
struct MlpWeights {
  Eigen::MatrixXd w_in;   // hidden x inputs
  Eigen::VectorXd b_in;   // hidden
  Eigen::VectorXd w_out;  // hidden
  double b_out = 0.0;

  static Eigen::Index parameter_count(Eigen::Index inputs, Eigen::Index hidden) {
    return hidden * inputs + 2 * hidden + 1;
  }

  Eigen::VectorXd pack() const {
    const auto H = w_in.rows();
    const auto D = w_in.cols();
    Eigen::VectorXd p(parameter_count(D, H));
    Eigen::Index k = 0;
    for (Eigen::Index h = 0; h < H; ++h)
      for (Eigen::Index j = 0; j < D; ++j) p(k++) = w_in(h, j);
    p.segment(k, H) = b_in;
    k += H;
    p.segment(k, H) = w_out;
    k += H;
    p(k) = b_out;
    return p;
  }

  static MlpWeights unpack(const Eigen::VectorXd& p, Eigen::Index inputs, Eigen::Index hidden) {
    if (p.size() != parameter_count(inputs, hidden)) throw Error("MLP parameter vector has the wrong size");
    MlpWeights w;
    w.w_in.resize(hidden, inputs);
    Eigen::Index k = 0;
    for (Eigen::Index h = 0; h < hidden; ++h)
      for (Eigen::Index j = 0; j < inputs; ++j) w.w_in(h, j) = p(k++);
    w.b_in = p.segment(k, hidden);
    k += hidden;
    w.w_out = p.segment(k, hidden);
    k += hidden;
    w.b_out = p(k);
    return w;
  }

  /// Sigmoid output in (0, 1) for one input row.
  double forward(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    const Eigen::VectorXd a = (w_in * x + b_in).unaryExpr([](double s) { return sigmoid(s); });
    return sigmoid(w_out.dot(a) + b_out);
  }
};

/// Residuals o_i - t_i over a fixed data set, with the analytic Jacobian.
class MlpProblem {
 public:
  MlpProblem(Eigen::MatrixXd inputs, Eigen::VectorXd targets, Eigen::Index hidden)
      : x_(std::move(inputs)), t_(std::move(targets)), hidden_(hidden) {}

  Eigen::Index parameter_count() const { return MlpWeights::parameter_count(x_.cols(), hidden_); }

  Eigen::VectorXd residuals(const Eigen::VectorXd& p) const {
    const auto w = MlpWeights::unpack(p, x_.cols(), hidden_);
    Eigen::VectorXd r(x_.rows());
    for (Eigen::Index i = 0; i < x_.rows(); ++i) r(i) = w.forward(x_.row(i).transpose()) - t_(i);
    return r;
  }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& p) const {
    const auto w = MlpWeights::unpack(p, x_.cols(), hidden_);
    const auto D = x_.cols();
    const auto H = hidden_;
    Eigen::MatrixXd J(x_.rows(), p.size());
    for (Eigen::Index i = 0; i < x_.rows(); ++i) {
      const Eigen::VectorXd x = x_.row(i).transpose();
      const Eigen::VectorXd a = (w.w_in * x + w.b_in).unaryExpr([](double s) { return sigmoid(s); });
      const double o = sigmoid(w.w_out.dot(a) + w.b_out);
      const double dout = o * (1.0 - o);
      Eigen::Index k = 0;
      for (Eigen::Index h = 0; h < H; ++h) {
        const double dh = dout * w.w_out(h) * a(h) * (1.0 - a(h));
        for (Eigen::Index j = 0; j < D; ++j) J(i, k++) = dh * x(j);
      }
      for (Eigen::Index h = 0; h < H; ++h) J(i, k++) = dout * w.w_out(h) * a(h) * (1.0 - a(h));
      for (Eigen::Index h = 0; h < H; ++h) J(i, k++) = dout * a(h);
      J(i, k) = dout;
    }
    return J;
  }

 private:
  Eigen::MatrixXd x_;
  Eigen::VectorXd t_;
  Eigen::Index hidden_;
};

struct MlpModel {
  std::vector<std::string> features;
  int hidden = 0;
  MlpWeights weights;
  // growth = target_offset + target_scale * network output
  double target_offset = 0.0;
  double target_scale = 1.0;
  std::vector<MlpEpoch> trace;
  int best_epoch = 0;
  std::uint64_t seed = 0;
};

namespace detail {

inline Eigen::MatrixXd rows_of(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
  return out;
}

inline Eigen::VectorXd rows_of(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(idx[i]);
  return out;
}

}  // namespace detail

inline MlpModel fit_mlp(const FeatureMatrix& train, const MlpSpec& spec, std::uint64_t seed) {
  if (spec.hidden < 1) throw Error("MLP hidden size must be >= 1");
  if (spec.max_epochs < 0 || spec.patience < 1 || !(spec.lambda0 > 0.0)) throw Error("invalid MLP training spec");
  const auto n = static_cast<Eigen::Index>(train.rows());
  if (n < 5) throw Error("MLP needs at least 5 training rows, got " + std::to_string(n));

  Rng rng(seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  rng.shuffle(order);
  const auto n_hold = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::lround(0.15 * static_cast<double>(n))));
  const auto n_fit = n - 2 * n_hold;
  const std::vector<Eigen::Index> fit_idx(order.begin(), order.begin() + n_fit);
  const std::vector<Eigen::Index> val_idx(order.begin() + n_fit, order.begin() + n_fit + n_hold);
  const std::vector<Eigen::Index> test_idx(order.begin() + n_fit + n_hold, order.end());

  MlpModel model;
  model.features = train.columns;
  model.hidden = spec.hidden;
  model.seed = seed;
  const double lo = train.target.minCoeff();
  const double hi = train.target.maxCoeff();
  if (hi > lo) {
    model.target_scale = (hi - lo) / 0.8;
    model.target_offset = lo - 0.1 * model.target_scale;
  } else {
    model.target_scale = 1.0;
    model.target_offset = lo - 0.5;
  }
  const Eigen::VectorXd scaled = (train.target.array() - model.target_offset) / model.target_scale;

  const auto D = static_cast<Eigen::Index>(train.cols());
  const Eigen::Index H = spec.hidden;
  const MlpProblem fit_problem(detail::rows_of(train.values, fit_idx), detail::rows_of(scaled, fit_idx), H);
  const MlpProblem val_problem(detail::rows_of(train.values, val_idx), detail::rows_of(scaled, val_idx), H);
  const MlpProblem test_problem(detail::rows_of(train.values, test_idx), detail::rows_of(scaled, test_idx), H);

  Eigen::VectorXd params(fit_problem.parameter_count());
  for (Eigen::Index i = 0; i < params.size(); ++i) params(i) = rng.uniform(-0.5, 0.5);

  auto record = [&](int epoch, const Eigen::VectorXd& p) {
    MlpEpoch e{epoch, half_sse(fit_problem.residuals(p)), half_sse(val_problem.residuals(p)),
               half_sse(test_problem.residuals(p))};
    if (!std::isfinite(e.train_error) || !std::isfinite(e.validation_error)) {
      throw Error("non-finite MLP error at epoch " + std::to_string(epoch));
    }
    model.trace.push_back(e);
    return e;
  };

  Eigen::VectorXd best = params;
  double best_val = record(0, params).validation_error;
  int since_best = 0;
  double lambda = spec.lambda0;
  const LmOptions opt;
  for (int epoch = 1; epoch <= spec.max_epochs; ++epoch) {
    bool accepted = false;
    bool stop = false;
    while (!accepted) {
      const auto step = lm_step(params, fit_problem, lambda, opt);
      lambda = step.lambda;
      if (step.status == LmStatus::accepted) {
        params = step.params;
        accepted = true;
      } else if (step.status == LmStatus::stationary || lambda > opt.lambda_max) {
        stop = true;
        break;
      }
    }
    if (stop) break;
    const auto e = record(epoch, params);
    if (e.validation_error < best_val) {
      best_val = e.validation_error;
      best = params;
      model.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= spec.patience) {
      break;
    }
  }
  model.weights = MlpWeights::unpack(best, D, H);
  return model;
}

inline double predict_mlp(const MlpModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return model.target_offset + model.target_scale * model.weights.forward(x);
}

/// Predictions for every row; columns are matched to the model's features by name.
inline std::vector<double> predict_mlp(const MlpModel& model, const FeatureMatrix& m) {
  const auto X = m.select_columns(model.features).values;
  std::vector<double> out;
  for (Eigen::Index r = 0; r < X.rows(); ++r) out.push_back(predict_mlp(model, X.row(r).transpose()));
  return out;
}

}  // namespace aspectcast
