#pragma once

#include <algorithm>
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

#include "stvar/solvers.hpp"
#include "stvar/types.hpp"

namespace stvar {

struct BaselineSettings {
  double lambda_b = 0.1;
  AdmmSettings admm;

  void validate() const {
    if (lambda_b <= 0.0)
      throw std::invalid_argument("BaselineSettings: lambda_b must be positive");
    admm.validate();
  }
};

// Chronological holdout split used to pick the baseline penalty by
// prediction error, the standard lasso tuning route. The first
// floor(train_frac * T) rows train, the rest validate.
struct HoldoutSplit {
  StackedData train;
  StackedData validate;
};

inline HoldoutSplit holdout_split(const StackedData& data, double train_frac = 0.8) {
  if (train_frac <= 0.0 || train_frac >= 1.0)
    throw std::invalid_argument("holdout_split: train_frac must be in (0,1)");
  const int t_train = std::max(2, static_cast<int>(data.T * train_frac));
  if (t_train >= data.T)
    throw std::invalid_argument("holdout_split: not enough rows to validate");
  HoldoutSplit out;
  out.train = data;
  out.train.Y = data.Y.topRows(t_train);
  out.train.X = data.X.topRows(t_train);
  out.train.T = t_train;
  out.validate = data;
  out.validate.Y = data.Y.bottomRows(data.T - t_train);
  out.validate.X = data.X.bottomRows(data.T - t_train);
  out.validate.T = data.T - t_train;
  return out;
}

// Two-step comparison estimator: restrict every p x p tile of B to the
// spatial graph, then solve an independent masked lasso per response
// coordinate with unit weights, ignoring the factorized structure.
inline TransitionMatrix twostep_fit(const StackedData& data, const SpatialGraph& graph,
                                    const BaselineSettings& settings) {
  settings.validate();
  if (data.T < 2) throw std::invalid_argument("twostep_fit: need T >= 2");
  if (graph.p != data.p)
    throw std::invalid_argument("twostep_fit: graph location count != data layout");
  const int p = data.p;
  const Eigen::Index q = data.X.cols();
  const double scale = 2.0 / data.T;
  auto shared_gram = std::make_shared<MatrixXd>(scale * (data.X.transpose() * data.X));
  const bool big = q >= 256;

  MatrixXd b_hat = MatrixXd::Zero(data.Y.cols(), q);
  const MatrixXd omega = graph.indicator();
  const VectorXd unit_w = VectorXd::Ones(q);
  for (Eigen::Index row = 0; row < data.Y.cols(); ++row) {
    const int s = static_cast<int>(row % p);
    std::vector<uint8_t> mask(q, 0);
    for (Eigen::Index col = 0; col < q; ++col)
      mask[col] = omega(s, static_cast<int>(col % p)) != 0.0 ? 1 : 0;
    const VectorXd y = data.Y.col(row);
    detail::DenseQuadraticModel model(shared_gram, scale * (data.X.transpose() * y),
                                      y.squaredNorm() / data.T, big);
    auto [coef, diag] = detail::admm_l1(model, settings.lambda_b, &unit_w, &mask,
                                        settings.admm);
    b_hat.row(row) = coef.transpose();
  }
  return TransitionMatrix(std::move(b_hat), data.m_y, data.m_x, p);
}


// Penalty selection for the two-step estimator by holdout prediction error:
// fit on the chronological training block at each grid value, score one-step
// forecasts on the held-out block, keep the best (ties toward the larger,
// sparser penalty), then refit on the full sample.
inline TransitionMatrix twostep_fit_cv(const StackedData& data, const SpatialGraph& graph,
                                       const std::vector<double>& lambda_grid,
                                       const AdmmSettings& admm, double* lambda_star = nullptr,
                                       double train_frac = 0.8) {
  if (lambda_grid.empty())
    throw std::invalid_argument("twostep_fit_cv: empty penalty grid");
  BaselineSettings s;
  s.admm = admm;
  if (lambda_grid.size() == 1) {
    s.lambda_b = lambda_grid.front();
    if (lambda_star) *lambda_star = s.lambda_b;
    return twostep_fit(data, graph, s);
  }
  const HoldoutSplit split = holdout_split(data, train_frac);
  double best_err = std::numeric_limits<double>::infinity();
  double best_lambda = lambda_grid.front();
  for (double lb : lambda_grid) {
    s.lambda_b = lb;
    const TransitionMatrix b = twostep_fit(split.train, graph, s);
    const double err =
        (split.validate.Y - split.validate.X * b.values.transpose()).squaredNorm();
    if (err < best_err || (err == best_err && lb > best_lambda)) {
      best_err = err;
      best_lambda = lb;
    }
  }
  s.lambda_b = best_lambda;
  if (lambda_star) *lambda_star = best_lambda;
  return twostep_fit(data, graph, s);
}

}  // namespace stvar
