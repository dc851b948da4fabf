#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "stvar/types.hpp"

namespace stvar {

struct AdmmSettings {
  double rho0 = 1.0;
  double alpha_ratio = 10.0;  // residual-balancing ratio
  double eps_pri = 1e-6;      // absolute, on ||r|| / sqrt(dim)
  double eps_dual = 1e-6;     // absolute, on ||s|| / sqrt(dim)
  int max_iter = 5000;

  void validate() const {
    if (rho0 <= 0.0 || eps_pri <= 0.0 || eps_dual <= 0.0 || max_iter <= 0 ||
        alpha_ratio <= 1.0)
      throw std::invalid_argument("AdmmSettings: all fields positive, alpha_ratio > 1");
  }
};

struct AdmmDiagnostics {
  int iterations = 0;
  double primal_residual = 0.0;  // final ||b - z||_2
  double dual_residual = 0.0;    // final rho * ||z - z_prev||_2
  double kkt = 0.0;              // subgradient violation at the returned coef
  double rho_final = 0.0;
  int rho_changes = 0;
  int factorizations = 0;
  bool converged = false;
};

// Penalized least squares instance: (1/loss_scale)||response - design*b||^2
// + penalty * sum_l w_l |b_l|, optionally restricted to a support mask.
struct LassoProblem {
  MatrixXd design;     // n x q
  VectorXd response;   // n
  double loss_scale = 1.0;
  double penalty = 0.0;
  VectorXd weights;               // empty or length q, entries >= 0
  std::vector<uint8_t> support_mask;  // empty or length q, 1 = admissible

  void validate() const {
    if (design.rows() != response.size())
      throw std::invalid_argument("LassoProblem: design rows != response length");
    if (loss_scale <= 0.0)
      throw std::invalid_argument("LassoProblem: loss_scale must be positive");
    if (penalty < 0.0)
      throw std::invalid_argument("LassoProblem: penalty must be >= 0");
    if (weights.size() != 0 && weights.size() != design.cols())
      throw std::invalid_argument("LassoProblem: weights length != column count");
    for (Eigen::Index l = 0; l < weights.size(); ++l)
      if (!std::isfinite(weights[l]) || weights[l] < 0.0)
        throw std::invalid_argument("LassoProblem: weights must be finite and >= 0");
    if (!support_mask.empty() &&
        support_mask.size() != static_cast<std::size_t>(design.cols()))
      throw std::invalid_argument("LassoProblem: mask length != column count");
  }
};

// S_a(x) = sign(x) (|x| - a)_+, entrywise with per-coordinate thresholds.
inline VectorXd soft_threshold(const VectorXd& x, const VectorXd& thresholds) {
  if (thresholds.size() != x.size())
    throw std::invalid_argument("soft_threshold: size mismatch");
  VectorXd out(x.size());
  for (Eigen::Index l = 0; l < x.size(); ++l) {
    const double a = thresholds[l];
    if (a < 0.0) throw std::invalid_argument("soft_threshold: negative threshold");
    const double mag = std::abs(x[l]) - a;
    out[l] = mag > 0.0 ? (x[l] > 0.0 ? mag : -mag) : 0.0;
  }
  return out;
}

inline VectorXd soft_threshold(const VectorXd& x, double threshold) {
  return soft_threshold(x, VectorXd::Constant(x.size(), threshold));
}

// Residual-balancing step-size rule: double rho when the primal residual
// dominates, halve it when the dual residual dominates.
inline double update_rho(double rho, double primal_norm, double dual_norm,
                         double alpha_ratio) {
  if (rho <= 0.0) throw std::invalid_argument("update_rho: rho must be positive");
  if (primal_norm > alpha_ratio * dual_norm) return 2.0 * rho;
  if (dual_norm > alpha_ratio * primal_norm) return rho / 2.0;
  return rho;
}

namespace detail {

// Max violation of the subgradient optimality condition given the smooth
// gradient g at coef. Off-mask coordinates contribute zero.
inline double kkt_violation(const VectorXd& grad, const VectorXd& coef,
                            double penalty, const VectorXd* weights,
                            const std::vector<uint8_t>* mask) {
  double worst = 0.0;
  for (Eigen::Index l = 0; l < coef.size(); ++l) {
    if (mask && !(*mask)[l]) continue;
    const double w = weights ? (*weights)[l] : 1.0;
    const double thr = penalty * w;
    double v;
    if (coef[l] != 0.0)
      v = std::abs(grad[l] + (coef[l] > 0.0 ? thr : -thr));
    else
      v = std::max(0.0, std::abs(grad[l]) - thr);
    worst = std::max(worst, v);
  }
  return worst;
}

// Quadratic form of the smooth loss (1/tau)||y - A b||^2 reduced to its
// Gram representation: scaled Gram S = (2/tau) A'A, linear term
// atb = (2/tau) A'y, and constant yty = (1/tau) y'y. The ridge solve
// (S + rho I)^{-1} v caches its factorization until rho changes; with the
// one-shot eigendecomposition enabled the single factorization serves
// every rho.
class DenseQuadraticModel {
 public:
  DenseQuadraticModel(const MatrixXd& design, const VectorXd& response,
                      double loss_scale, bool use_eigh = false)
      : use_eigh_(use_eigh) {
    const double s = 2.0 / loss_scale;
    gram_ = std::make_shared<MatrixXd>(s * (design.transpose() * design));
    atb_ = s * (design.transpose() * response);
    yty_ = response.squaredNorm() / loss_scale;
  }

  // Shared-Gram constructor: many responses against one design.
  DenseQuadraticModel(std::shared_ptr<const MatrixXd> scaled_gram, VectorXd atb,
                      double yty, bool use_eigh = false)
      : gram_(std::move(scaled_gram)), atb_(std::move(atb)), yty_(yty),
        use_eigh_(use_eigh) {}

  Eigen::Index dim() const { return gram_->rows(); }
  const VectorXd& atb() const { return atb_; }

  VectorXd apply(const VectorXd& b) const { return (*gram_) * b; }

  VectorXd solve(double rho, const VectorXd& v) {
    if (use_eigh_) {
      if (!eigh_) {
        eigh_ = std::make_unique<Eigen::SelfAdjointEigenSolver<MatrixXd>>(*gram_);
        ++factorizations_;
      }
      const VectorXd t = eigh_->eigenvectors().transpose() * v;
      const VectorXd scaled =
          t.array() / (eigh_->eigenvalues().array() + rho);
      return eigh_->eigenvectors() * scaled;
    }
    if (!llt_ || rho != rho_cached_) {
      MatrixXd shifted = *gram_;
      shifted.diagonal().array() += rho;
      llt_ = std::make_unique<Eigen::LLT<MatrixXd>>(shifted);
      rho_cached_ = rho;
      ++factorizations_;
    }
    return llt_->solve(v);
  }

  double loss(const VectorXd& b) const {
    return yty_ - b.dot(atb_) + 0.5 * b.dot(apply(b));
  }

  int factorizations() const { return factorizations_; }

 private:
  std::shared_ptr<const MatrixXd> gram_;  // (2/tau) A'A
  VectorXd atb_;                          // (2/tau) A'y
  double yty_ = 0.0;                      // (1/tau) y'y
  bool use_eigh_ = false;
  std::unique_ptr<Eigen::LLT<MatrixXd>> llt_;
  std::unique_ptr<Eigen::SelfAdjointEigenSolver<MatrixXd>> eigh_;
  double rho_cached_ = -1.0;
  int factorizations_ = 0;
};

// Quadratic model for a spatial-block subproblem without materializing its
// Tp x p^2 design. The design A = gamma (I_p (x) X_j) K satisfies
// A vec(Theta) = vec(gamma X_j Theta'), so with G = X_j'X_j:
//   (2/tau) A'A vec(Theta) = vec(Theta S),  S = (2 gamma^2 / tau) G,
// and the ridge solve reduces to the p x p system Theta (S + rho I) = V.
class KroneckerQuadraticModel {
 public:
  // xtx = X_j'X_j; xtr = X_j'R for the current partial residual R (T x p).
  KroneckerQuadraticModel(const MatrixXd& xtx, const MatrixXd& xtr,
                          double gamma, double loss_scale, double rty)
      : p_(static_cast<int>(xtx.rows())) {
    const double s = 2.0 / loss_scale;
    scaled_gram_ = (s * gamma * gamma) * xtx;
    const MatrixXd rhs = (s * gamma) * xtr.transpose();  // R'X_j, p x p
    atb_ = Eigen::Map<const VectorXd>(rhs.data(), rhs.size());
    yty_ = rty / loss_scale;
  }

  Eigen::Index dim() const { return static_cast<Eigen::Index>(p_) * p_; }
  const VectorXd& atb() const { return atb_; }

  VectorXd apply(const VectorXd& b) const {
    const Eigen::Map<const MatrixXd> theta(b.data(), p_, p_);
    MatrixXd out = theta * scaled_gram_;
    return Eigen::Map<VectorXd>(out.data(), out.size());
  }

  VectorXd solve(double rho, const VectorXd& v) {
    if (!llt_ || rho != rho_cached_) {
      MatrixXd shifted = scaled_gram_;
      shifted.diagonal().array() += rho;
      llt_ = std::make_unique<Eigen::LLT<MatrixXd>>(shifted);
      rho_cached_ = rho;
      ++factorizations_;
    }
    const Eigen::Map<const MatrixXd> vmat(v.data(), p_, p_);
    MatrixXd out = llt_->solve(vmat.transpose()).transpose();
    return Eigen::Map<VectorXd>(out.data(), out.size());
  }

  double loss(const VectorXd& b) const {
    return yty_ - b.dot(atb_) + 0.5 * b.dot(apply(b));
  }

  int factorizations() const { return factorizations_; }

 private:
  int p_;
  MatrixXd scaled_gram_;  // (2 gamma^2 / tau) X_j'X_j
  VectorXd atb_;
  double yty_ = 0.0;
  std::unique_ptr<Eigen::LLT<MatrixXd>> llt_;
  double rho_cached_ = -1.0;
  int factorizations_ = 0;
};

// Scaled-form ADMM for the l1-penalized quadratic model with optional
// per-coordinate weights and support projection:
//   b   <- (S + rho I)^{-1} (atb + rho (z - u))
//   z   <- Proj_mask( S_{penalty * w / rho}(b + u) )
//   u   <- u + b - z
// Convergence needs primal and dual residuals below the sqrt(dim)-scaled
// tolerances and the subgradient violation at z below 10 * max(eps); on a
// rho change the scaled dual is rescaled by rho/rho'.
template <class Model>
std::pair<VectorXd, AdmmDiagnostics> admm_l1(Model& model, double penalty,
                                             const VectorXd* weights,
                                             const std::vector<uint8_t>* mask,
                                             const AdmmSettings& settings,
                                             const VectorXd* warm_start = nullptr) {
  settings.validate();
  const Eigen::Index q = model.dim();
  const double sq = std::sqrt(static_cast<double>(q));
  const double kkt_tol = 10.0 * std::max(settings.eps_pri, settings.eps_dual);

  VectorXd thr_base(q);
  for (Eigen::Index l = 0; l < q; ++l)
    thr_base[l] = penalty * (weights ? (*weights)[l] : 1.0);

  VectorXd z = warm_start ? *warm_start : VectorXd::Zero(q);
  if (mask)
    for (Eigen::Index l = 0; l < q; ++l)
      if (!(*mask)[l]) z[l] = 0.0;
  VectorXd u = VectorXd::Zero(q);
  VectorXd b(q), z_prev(q);

  double rho = settings.rho0;
  AdmmDiagnostics diag;
  for (int it = 1; it <= settings.max_iter; ++it) {
    diag.iterations = it;
    b = model.solve(rho, model.atb() + rho * (z - u));
    z_prev = z;
    z = soft_threshold(b + u, thr_base / rho);
    if (mask)
      for (Eigen::Index l = 0; l < q; ++l)
        if (!(*mask)[l]) z[l] = 0.0;
    u += b - z;

    const double pri = (b - z).norm();
    const double dual = rho * (z - z_prev).norm();
    diag.primal_residual = pri;
    diag.dual_residual = dual;

    if (pri <= settings.eps_pri * sq && dual <= settings.eps_dual * sq) {
      diag.kkt = kkt_violation(model.apply(z) - model.atb(), z, penalty, weights, mask);
      if (diag.kkt <= kkt_tol) {
        diag.converged = true;
        break;
      }
    }

    const double rho_next = update_rho(rho, pri, dual, settings.alpha_ratio);
    if (rho_next != rho) {
      u *= rho / rho_next;
      rho = rho_next;
      ++diag.rho_changes;
    }
  }
  if (!diag.converged)
    diag.kkt = kkt_violation(model.apply(z) - model.atb(), z, penalty, weights, mask);
  diag.rho_final = rho;
  diag.factorizations = model.factorizations();
  return {std::move(z), std::move(diag)};
}

}  // namespace detail

// Plain lasso solve. The problem must carry neither weights nor a mask.
inline std::pair<VectorXd, AdmmDiagnostics> admm_lasso(
    const LassoProblem& problem, const AdmmSettings& settings) {
  problem.validate();
  if (problem.weights.size() != 0 || !problem.support_mask.empty())
    throw std::invalid_argument("admm_lasso: use admm_weighted_lasso for weights/mask");
  detail::DenseQuadraticModel model(problem.design, problem.response,
                                    problem.loss_scale);
  return detail::admm_l1(model, problem.penalty, nullptr, nullptr, settings);
}

// Diagonal-weight, support-projected lasso solve. Missing weights default to
// ones; a missing mask means all coordinates are admissible.
inline std::pair<VectorXd, AdmmDiagnostics> admm_weighted_lasso(
    const LassoProblem& problem, const AdmmSettings& settings) {
  problem.validate();
  detail::DenseQuadraticModel model(problem.design, problem.response,
                                    problem.loss_scale);
  VectorXd w = problem.weights.size() != 0
                   ? problem.weights
                   : VectorXd::Ones(problem.design.cols());
  const std::vector<uint8_t>* mask =
      problem.support_mask.empty() ? nullptr : &problem.support_mask;
  return detail::admm_l1(model, problem.penalty, &w, mask, settings);
}

// First-order certificate: max subgradient violation of the (weighted,
// masked) objective at coef, with g = -(2/tau) A'(y - A coef).
inline double kkt_residual(const LassoProblem& problem, const VectorXd& coef) {
  problem.validate();
  if (coef.size() != problem.design.cols())
    throw std::invalid_argument("kkt_residual: coef length != column count");
  const VectorXd grad = (2.0 / problem.loss_scale) *
                        (problem.design.transpose() *
                         (problem.design * coef - problem.response));
  const VectorXd* w = problem.weights.size() != 0 ? &problem.weights : nullptr;
  const std::vector<uint8_t>* mask =
      problem.support_mask.empty() ? nullptr : &problem.support_mask;
  return detail::kkt_violation(grad, coef, problem.penalty, w, mask);
}

// Objective value of a LassoProblem at coef.
inline double lasso_objective(const LassoProblem& problem, const VectorXd& coef) {
  double pen = 0.0;
  for (Eigen::Index l = 0; l < coef.size(); ++l) {
    const double w = problem.weights.size() != 0 ? problem.weights[l] : 1.0;
    pen += problem.penalty * w * std::abs(coef[l]);
  }
  return (problem.response - problem.design * coef).squaredNorm() /
             problem.loss_scale +
         pen;
}

}  // namespace stvar
