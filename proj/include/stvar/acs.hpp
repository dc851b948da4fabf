#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stvar/model.hpp"
#include "stvar/parallel.hpp"
#include "stvar/solvers.hpp"
#include "stvar/types.hpp"
#include "stvar/weights.hpp"

namespace stvar {

struct FitSettings {
  double lambda = 0.1;   // cross-variable penalty
  double mu = 0.1;       // spatial-block penalty
  double eps_acs = 0.0;  // outer tolerance; <= 0 selects 1e-4 * sqrt(dim)
  int max_outer = 50;
  AdmmSettings admm;
  double lambda0 = 0.0;  // initialization penalties; <= 0 falls back to lambda/mu
  double mu0 = 0.0;
  bool verify_fixed_point = false;  // run one extra sweep pair after convergence

  void validate() const {
    if (lambda <= 0.0 || mu <= 0.0)
      throw std::invalid_argument("FitSettings: penalties must be positive");
    if (max_outer <= 0) throw std::invalid_argument("FitSettings: max_outer must be positive");
    admm.validate();
  }
};

// One outer-iteration record. The objective is tracked after each of the
// two block sweeps; the loss and the two penalty terms are reported
// separately.
struct OuterTrace {
  int iter = 0;
  double f_after_gamma = 0.0;
  double f_after_theta = 0.0;
  double f_after_balance = 0.0;
  double loss = 0.0;
  double penalty_gamma = 0.0;
  double penalty_theta = 0.0;
  double delta = std::numeric_limits<double>::infinity();
  long inner_iters_gamma = 0;
  long inner_iters_theta = 0;
  int rho_changes = 0;
  double max_kkt = 0.0;  // over converged subproblem solves this iteration
  int nonconverged_solves = 0;
  double containment_violation = 0.0;  // max |entry| outside the graph
};

// Converged factors are reported as the alternating loop leaves them, i.e.
// a blockwise-stationary point; normalize_blocks maps them to the canonical
// unit-norm form without changing b_hat. max_renorm_drift records the
// product perturbation of that fold.
struct FitResult {
  CrossVariableMatrix gamma_hat;
  SpatialBlocks theta_hat;
  TransitionMatrix b_hat;
  std::vector<OuterTrace> trace;
  bool converged = false;
  int outer_iters = 0;
  double objective = 0.0;
  double loss_final = 0.0;
  // Aggregated diagnostics over the whole fit.
  double max_kkt = 0.0;
  int nonconverged_solves = 0;
  double max_descent_violation = -std::numeric_limits<double>::infinity();
  double max_containment_violation = 0.0;
  double max_renorm_drift = 0.0;
  // Block changes of one extra sweep pair, when verify_fixed_point is set.
  double delta_extra_gamma = std::numeric_limits<double>::quiet_NaN();
  double delta_extra_theta = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

// Per-dataset tables shared by every fit on the same stacked data: variable
// blocks of X and Y, all cross Grams X_k'X_l, the products X_k'Y_i, and the
// location-mean processes used by the initializer.
struct DataCache {
  int T = 0, p = 0, m_y = 0, m_x = 0;
  std::vector<MatrixXd> x_blk, y_blk;
  std::vector<MatrixXd> gram;   // k * m_x + l  ->  X_k' X_l
  std::vector<MatrixXd> cross;  // k * m_y + i  ->  X_k' Y_i
  std::vector<double> yty;      // ||Y_i||_F^2
  MatrixXd x_mean, y_mean;      // T x m_x, T x m_y

  const MatrixXd& G(int k, int l) const { return gram[static_cast<std::size_t>(k) * m_x + l]; }
  const MatrixXd& C(int k, int i) const { return cross[static_cast<std::size_t>(k) * m_y + i]; }

  static std::shared_ptr<const DataCache> build(const StackedData& data) {
    auto cache = std::make_shared<DataCache>();
    cache->T = data.T;
    cache->p = data.p;
    cache->m_y = data.m_y;
    cache->m_x = data.m_x;
    const int p = data.p;
    for (int k = 0; k < data.m_x; ++k) cache->x_blk.push_back(data.X.middleCols(k * p, p));
    for (int i = 0; i < data.m_y; ++i) cache->y_blk.push_back(data.Y.middleCols(i * p, p));
    cache->gram.reserve(static_cast<std::size_t>(data.m_x) * data.m_x);
    for (int k = 0; k < data.m_x; ++k)
      for (int l = 0; l < data.m_x; ++l)
        cache->gram.push_back(cache->x_blk[k].transpose() * cache->x_blk[l]);
    cache->cross.reserve(static_cast<std::size_t>(data.m_x) * data.m_y);
    for (int k = 0; k < data.m_x; ++k)
      for (int i = 0; i < data.m_y; ++i)
        cache->cross.push_back(cache->x_blk[k].transpose() * cache->y_blk[i]);
    for (int i = 0; i < data.m_y; ++i) cache->yty.push_back(cache->y_blk[i].squaredNorm());
    cache->x_mean.resize(data.T, data.m_x);
    for (int k = 0; k < data.m_x; ++k) cache->x_mean.col(k) = cache->x_blk[k].rowwise().mean();
    cache->y_mean.resize(data.T, data.m_y);
    for (int i = 0; i < data.m_y; ++i) cache->y_mean.col(i) = cache->y_blk[i].rowwise().mean();
    return cache;
  }
};

inline double tr_product(const MatrixXd& a, const MatrixXd& b) {
  return (a.array() * b.transpose().array()).sum();
}

// Alternating convex search over (Gamma, Theta) with warm-started ADMM
// subproblem solves and Gauss-Seidel spatial sweeps.
class AcsEngine {
 public:
  AcsEngine(std::shared_ptr<const DataCache> cache, const SpatialGraph& graph,
            const WeightMatrix& w, FitSettings settings)
      : cache_(std::move(cache)), graph_(&graph), settings_(std::move(settings)) {
    settings_.validate();
    if (graph.p != cache_->p)
      throw std::invalid_argument("acs: graph location count != data layout");
    if (cache_->T < 2) throw std::invalid_argument("acs: need T >= 2");
    validate_weights(w, graph);
    p_ = cache_->p;
    m_y_ = cache_->m_y;
    m_x_ = cache_->m_x;
    if (settings_.eps_acs <= 0.0)
      settings_.eps_acs = 1e-4 * std::sqrt(static_cast<double>(m_y_) * m_x_ * (1.0 + p_ * p_));
    if (settings_.lambda0 <= 0.0) settings_.lambda0 = settings_.lambda;
    if (settings_.mu0 <= 0.0) settings_.mu0 = settings_.mu;
    mask_.assign(static_cast<std::size_t>(p_) * p_, 0);
    weight_vec_.resize(static_cast<Eigen::Index>(p_) * p_);
    for (int t = 0; t < p_; ++t)
      for (int s = 0; s < p_; ++s) {
        weight_vec_[s + static_cast<Eigen::Index>(t) * p_] = w.values(s, t);
        if (graph.has(s, t)) mask_[s + static_cast<std::size_t>(t) * p_] = 1;
      }
    gamma_ = MatrixXd::Zero(m_y_, m_x_);
    theta_ = SpatialBlocks(m_y_, m_x_, p_);
    resid_.assign(m_y_, MatrixXd());
    gamma_warm_.assign(m_y_, VectorXd::Zero(m_x_));
  }

  // Row-wise lasso on the location-mean processes.
  MatrixXd init_gamma_matrix() {
    MatrixXd g0(m_y_, m_x_);
    const double s = 2.0 / cache_->T;
    auto shared_gram =
        std::make_shared<MatrixXd>(s * (cache_->x_mean.transpose() * cache_->x_mean));
    for (int i = 0; i < m_y_; ++i) {
      const VectorXd y = cache_->y_mean.col(i);
      detail::DenseQuadraticModel model(shared_gram,
                                        s * (cache_->x_mean.transpose() * y),
                                        y.squaredNorm() / cache_->T);
      auto [coef, diag] = detail::admm_l1(model, settings_.lambda0, nullptr,
                                          nullptr, settings_.admm);
      record_solve(diag, /*gamma_side=*/true);
      g0.row(i) = coef.transpose();
    }
    return g0;
  }

  void set_gamma(const MatrixXd& g) {
    gamma_ = g;
    for (int i = 0; i < m_y_; ++i) gamma_warm_[i] = g.row(i).transpose();
    rebuild_residuals();
  }

  // One Gauss-Seidel pass over all spatial blocks at the given penalty.
  void theta_sweep(double mu) {
    for (int i = 0; i < m_y_; ++i)
      for (int j = 0; j < m_x_; ++j) {
        MatrixXd& blk = theta_.block(i, j);
        const double g = gamma_(i, j);
        if (g == 0.0) {
          blk.setZero();  // inactive pair; contributes nothing to the residual
          continue;
        }
        const bool blk_zero = blk.isZero(0.0);
        MatrixXd r_full = resid_[i];
        if (!blk_zero) r_full.noalias() += g * (cache_->x_blk[j] * blk.transpose());
        detail::KroneckerQuadraticModel model(cache_->G(j, j),
                                              cache_->x_blk[j].transpose() * r_full,
                                              g, cache_->T, r_full.squaredNorm());
        const Eigen::Map<const VectorXd> warm(blk.data(), blk.size());
        const VectorXd warm_copy = warm;
        auto [coef, diag] =
            detail::admm_l1(model, mu, &weight_vec_, &mask_, settings_.admm, &warm_copy);
        record_solve(diag, /*gamma_side=*/false);
        blk = Eigen::Map<const MatrixXd>(coef.data(), p_, p_);
        resid_[i] = std::move(r_full);
        if (!blk.isZero(0.0))
          resid_[i].noalias() -= g * (cache_->x_blk[j] * blk.transpose());
      }
  }

  // Row-wise lasso over the cross-variable coefficients with the spatial
  // blocks frozen; design Grams are assembled from the trace identities
  // (A_i'A_i)_{kl} = tr(Theta_ik X_k'X_l Theta_il').
  void gamma_sweep(double lambda) {
    for (int i = 0; i < m_y_; ++i) {
      MatrixXd s_i = MatrixXd::Zero(m_x_, m_x_);
      VectorXd atb = VectorXd::Zero(m_x_);
      std::vector<char> live(m_x_, 0);
      for (int k = 0; k < m_x_; ++k)
        live[k] = !theta_.block(i, k).isZero(0.0);
      const double scale = 2.0 / cache_->T;
      for (int k = 0; k < m_x_; ++k) {
        if (!live[k]) continue;
        atb[k] = scale * tr_product(theta_.block(i, k), cache_->C(k, i));
        for (int l = k; l < m_x_; ++l) {
          if (!live[l]) continue;
          const MatrixXd m = cache_->G(k, l) * theta_.block(i, l).transpose();
          s_i(k, l) = scale * tr_product(theta_.block(i, k), m);
          s_i(l, k) = s_i(k, l);
        }
      }
      detail::DenseQuadraticModel model(
          std::make_shared<MatrixXd>(std::move(s_i)), std::move(atb),
          cache_->yty[i] / cache_->T);
      auto [coef, diag] = detail::admm_l1(model, lambda, nullptr, nullptr,
                                          settings_.admm, &gamma_warm_[i]);
      record_solve(diag, /*gamma_side=*/true);
      gamma_warm_[i] = coef;
      gamma_.row(i) = coef.transpose();
    }
    rebuild_residuals();
  }

  // Exact minimization of f along the scale-invariance direction of each
  // block: with the product gamma_ij * Theta_ij fixed, the penalty
  // lambda |gamma| t + mu ||W o Theta||_1 / t is minimized at
  // t = sqrt(mu ||W o Theta||_1 / (lambda |gamma|)), which equalizes the two
  // per-block penalty terms. Any blockwise optimum satisfies this balance,
  // so the step never moves a converged state; away from convergence it
  // collapses the flat ridge the plain alternation crawls along. Products
  // and hence the loss are unchanged.
  void balance_scales(double lambda, double mu) {
    for (int i = 0; i < m_y_; ++i)
      for (int j = 0; j < m_x_; ++j) {
        double& g = gamma_(i, j);
        if (g == 0.0) continue;
        MatrixXd& blk = theta_.block(i, j);
        const double kappa = weight_matrix().cwiseProduct(blk).cwiseAbs().sum();
        if (kappa == 0.0) continue;
        const double t = std::sqrt(mu * kappa / (lambda * std::abs(g)));
        g *= t;
        blk /= t;
      }
    for (int i = 0; i < m_y_; ++i) gamma_warm_[i] = gamma_.row(i).transpose();
  }

  double loss() const {
    double rss = 0.0;
    for (const auto& r : resid_) rss += r.squaredNorm();
    return rss / cache_->T;
  }

  double penalty_gamma() const { return settings_.lambda * gamma_.cwiseAbs().sum(); }

  double penalty_theta() const {
    double pen = 0.0;
    for (int i = 0; i < m_y_; ++i)
      for (int j = 0; j < m_x_; ++j) {
        const MatrixXd& blk = theta_.block(i, j);
        if (blk.isZero(0.0)) continue;
        pen += weight_matrix().cwiseProduct(blk).cwiseAbs().sum();
      }
    return settings_.mu * pen;
  }

  double containment_violation() const {
    double worst = 0.0;
    for (const auto& blk : theta_.blocks)
      for (int t = 0; t < p_; ++t)
        for (int s = 0; s < p_; ++s)
          if (!mask_[s + static_cast<std::size_t>(t) * p_])
            worst = std::max(worst, std::abs(blk(s, t)));
    return worst;
  }

  FitResult run() {
    FitResult result;
    // Initialization: mean-process lasso, then one spatial sweep from zero.
    reset_solve_stats();
    set_gamma(init_gamma_matrix());
    theta_sweep(settings_.mu0);
    OuterTrace init;
    init.iter = 0;
    init.f_after_gamma = objective();
    init.f_after_theta = init.f_after_gamma;
    balance_scales(settings_.lambda, settings_.mu);
    init.f_after_balance = objective();
    fill_trace_tail(init);
    result.trace.push_back(init);

    MatrixXd gamma_prev = gamma_;
    SpatialBlocks theta_prev = theta_;
    double f_prev = init.f_after_balance;
    bool converged = false;
    int k = 0;
    while (k < settings_.max_outer) {
      ++k;
      reset_solve_stats();
      OuterTrace rec;
      rec.iter = k;
      gamma_sweep(settings_.lambda);
      rec.f_after_gamma = objective();
      theta_sweep(settings_.mu);
      rec.f_after_theta = objective();
      balance_scales(settings_.lambda, settings_.mu);
      rec.f_after_balance = objective();
      fill_trace_tail(rec);
      rec.delta = (gamma_ - gamma_prev).norm() + theta_distance(theta_prev);
      result.max_descent_violation = std::max(
          {result.max_descent_violation,
           rec.f_after_gamma - f_prev - descent_slack(f_prev),
           rec.f_after_theta - rec.f_after_gamma - descent_slack(rec.f_after_gamma),
           rec.f_after_balance - rec.f_after_theta - descent_slack(rec.f_after_theta)});
      result.trace.push_back(rec);
      gamma_prev = gamma_;
      theta_prev = theta_;
      f_prev = rec.f_after_balance;
      if (rec.delta <= settings_.eps_acs) {
        converged = true;
        break;
      }
    }

    if (settings_.verify_fixed_point) {
      const MatrixXd gamma_saved = gamma_;
      const SpatialBlocks theta_saved = theta_;
      const std::vector<MatrixXd> resid_saved = resid_;
      const std::vector<VectorXd> warm_saved = gamma_warm_;
      gamma_sweep(settings_.lambda);
      result.delta_extra_gamma = (gamma_ - gamma_saved).norm();
      theta_sweep(settings_.mu);
      result.delta_extra_theta = theta_distance(theta_saved);
      gamma_ = gamma_saved;
      theta_ = theta_saved;
      resid_ = resid_saved;
      gamma_warm_ = warm_saved;
    }

    result.converged = converged;
    result.outer_iters = k;
    result.gamma_hat = CrossVariableMatrix(gamma_);
    result.theta_hat = theta_;
    result.b_hat = assemble_transition(result.gamma_hat, *graph_, result.theta_hat);
    result.loss_final = loss();
    result.objective = result.trace.back().f_after_balance;
    // Canonical-form fold as a diagnostic: the products must be preserved.
    auto [g_norm, t_norm] = normalize_blocks(result.gamma_hat, result.theta_hat);
    for (int i = 0; i < m_y_; ++i)
      for (int j = 0; j < m_x_; ++j) {
        const MatrixXd before = result.gamma_hat.values(i, j) * result.theta_hat.block(i, j);
        const MatrixXd after = g_norm.values(i, j) * t_norm.block(i, j);
        result.max_renorm_drift =
            std::max(result.max_renorm_drift, (after - before).cwiseAbs().maxCoeff());
      }
    for (const auto& rec : result.trace) {
      result.max_kkt = std::max(result.max_kkt, rec.max_kkt);
      result.nonconverged_solves += rec.nonconverged_solves;
      result.max_containment_violation =
          std::max(result.max_containment_violation, rec.containment_violation);
    }
    return result;
  }

  const MatrixXd& gamma() const { return gamma_; }
  const SpatialBlocks& theta() const { return theta_; }

 private:
  MatrixXd weight_matrix() const {
    return Eigen::Map<const MatrixXd>(weight_vec_.data(), p_, p_);
  }

  double objective() const { return loss() + penalty_gamma() + penalty_theta(); }

  static double descent_slack(double f) { return 1e-6 * (1.0 + std::abs(f)); }

  double theta_distance(const SpatialBlocks& other) const {
    double sq = 0.0;
    for (std::size_t b = 0; b < theta_.blocks.size(); ++b)
      sq += (theta_.blocks[b] - other.blocks[b]).squaredNorm();
    return std::sqrt(sq);
  }

  void rebuild_residuals() {
    for (int i = 0; i < m_y_; ++i) {
      resid_[i] = cache_->y_blk[i];
      for (int j = 0; j < m_x_; ++j) {
        const double g = gamma_(i, j);
        if (g == 0.0 || theta_.block(i, j).isZero(0.0)) continue;
        resid_[i].noalias() -= g * (cache_->x_blk[j] * theta_.block(i, j).transpose());
      }
    }
  }

  void reset_solve_stats() {
    iter_gamma_ = iter_theta_ = 0;
    rho_changes_ = 0;
    max_kkt_ = 0.0;
    nonconverged_ = 0;
  }

  void record_solve(const AdmmDiagnostics& diag, bool gamma_side) {
    (gamma_side ? iter_gamma_ : iter_theta_) += diag.iterations;
    rho_changes_ += diag.rho_changes;
    if (diag.converged)
      max_kkt_ = std::max(max_kkt_, diag.kkt);
    else
      ++nonconverged_;
  }

  void fill_trace_tail(OuterTrace& rec) const {
    rec.loss = loss();
    rec.penalty_gamma = penalty_gamma();
    rec.penalty_theta = penalty_theta();
    rec.inner_iters_gamma = iter_gamma_;
    rec.inner_iters_theta = iter_theta_;
    rec.rho_changes = rho_changes_;
    rec.max_kkt = max_kkt_;
    rec.nonconverged_solves = nonconverged_;
    rec.containment_violation = containment_violation();
  }

  std::shared_ptr<const DataCache> cache_;
  const SpatialGraph* graph_;
  FitSettings settings_;
  int p_ = 0, m_y_ = 0, m_x_ = 0;
  std::vector<uint8_t> mask_;
  VectorXd weight_vec_;
  MatrixXd gamma_;
  SpatialBlocks theta_;
  std::vector<MatrixXd> resid_;
  std::vector<VectorXd> gamma_warm_;
  long iter_gamma_ = 0, iter_theta_ = 0;
  int rho_changes_ = 0;
  double max_kkt_ = 0.0;
  int nonconverged_ = 0;
};

}  // namespace detail

// Lasso initializer on the location-mean processes.
inline CrossVariableMatrix init_gamma(const StackedData& data, double lambda0,
                                      const AdmmSettings& admm) {
  if (data.T < 2) throw std::invalid_argument("init_gamma: need T >= 2");
  FitSettings s;
  s.lambda = lambda0;
  s.mu = 1.0;
  s.lambda0 = lambda0;
  s.admm = admm;
  SpatialGraph trivial(data.p, {});
  WeightMatrix w(MatrixXd::Ones(data.p, data.p));
  detail::AcsEngine engine(detail::DataCache::build(data), trivial, w, s);
  return CrossVariableMatrix(engine.init_gamma_matrix());
}

// One spatial sweep from zero blocks with the cross-variable coefficients
// frozen at gamma0. Blocks of inactive pairs stay zero.
inline SpatialBlocks init_theta(const StackedData& data,
                                const CrossVariableMatrix& gamma0,
                                const SpatialGraph& graph, const WeightMatrix& w,
                                double mu0, const AdmmSettings& admm) {
  if (gamma0.rows() != data.m_y || gamma0.cols() != data.m_x)
    throw std::invalid_argument("init_theta: gamma0 shape does not match data");
  FitSettings s;
  s.lambda = 1.0;
  s.mu = mu0;
  s.mu0 = mu0;
  s.admm = admm;
  detail::AcsEngine engine(detail::DataCache::build(data), graph, w, s);
  engine.set_gamma(gamma0.values);
  engine.theta_sweep(mu0);
  return engine.theta();
}

inline FitResult acs_fit(const StackedData& data, const SpatialGraph& graph,
                         const WeightMatrix& w, const FitSettings& settings) {
  detail::AcsEngine engine(detail::DataCache::build(data), graph, w, settings);
  return engine.run();
}

// BIC of a fitted transition matrix: T*m*p * log(RSS / (T*m*p)) + nnz * log T.
// A zero residual is flagged and reported as -infinity.
inline double bic(const StackedData& data, const TransitionMatrix& b_hat,
                  bool* zero_residual = nullptr) {
  if (b_hat.values.rows() != data.Y.cols() || b_hat.values.cols() != data.X.cols())
    throw std::invalid_argument("bic: transition matrix does not match data layout");
  if (zero_residual) *zero_residual = false;
  const double rss = (data.Y - data.X * b_hat.values.transpose()).squaredNorm();
  const double n = static_cast<double>(data.T) * data.Y.cols();
  const double s_hat = static_cast<double>((b_hat.values.array() != 0.0).count());
  if (rss == 0.0) {
    if (zero_residual) *zero_residual = true;
    return -std::numeric_limits<double>::infinity();
  }
  return n * std::log(rss / n) + s_hat * std::log(static_cast<double>(data.T));
}

struct TuneResult {
  double lambda_star = 0.0;
  double mu_star = 0.0;
  FitResult fit;
  MatrixXd bic_table;  // lambda index x mu index
};

// Grid search minimizing BIC at the converged estimator. Ties break toward
// larger lambda, then larger mu; zero-residual fits are never selected.
inline TuneResult tune(const StackedData& data, const SpatialGraph& graph,
                       const WeightMatrix& w, const std::vector<double>& lambda_grid,
                       const std::vector<double>& mu_grid, const FitSettings& base,
                       int workers = 1) {
  if (lambda_grid.empty() || mu_grid.empty())
    throw std::invalid_argument("tune: empty grid");
  for (double v : lambda_grid)
    if (v <= 0.0) throw std::invalid_argument("tune: lambda grid values must be positive");
  for (double v : mu_grid)
    if (v <= 0.0) throw std::invalid_argument("tune: mu grid values must be positive");

  auto cache = detail::DataCache::build(data);
  const int nl = static_cast<int>(lambda_grid.size());
  const int nm = static_cast<int>(mu_grid.size());
  std::vector<std::optional<FitResult>> fits(static_cast<std::size_t>(nl) * nm);
  std::vector<double> bics(fits.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<uint8_t> degenerate(fits.size(), 0);

  detail::parallel_for(nl * nm, workers, [&](int idx) {
    const int a = idx / nm, b = idx % nm;
    FitSettings s = base;
    s.lambda = lambda_grid[a];
    s.mu = mu_grid[b];
    s.lambda0 = base.lambda0 > 0.0 ? base.lambda0 : s.lambda;
    s.mu0 = base.mu0 > 0.0 ? base.mu0 : s.mu;
    detail::AcsEngine engine(cache, graph, w, s);
    FitResult fit = engine.run();
    bool zero_res = false;
    bics[idx] = bic(data, fit.b_hat, &zero_res);
    degenerate[idx] = zero_res ? 1 : 0;
    fits[idx] = std::move(fit);
  });

  int best = -1;
  for (int a = 0; a < nl; ++a)
    for (int b = 0; b < nm; ++b) {
      const int idx = a * nm + b;
      if (degenerate[idx]) continue;
      if (best < 0 || bics[idx] < bics[best]) {
        best = idx;
      } else if (bics[idx] == bics[best]) {
        const double la = lambda_grid[idx / nm], lb = lambda_grid[best / nm];
        const double ma = mu_grid[idx % nm], mb = mu_grid[best % nm];
        if (la > lb || (la == lb && ma > mb)) best = idx;
      }
    }
  if (best < 0) {
    std::string msg = "tune: no admissible grid point;";
    for (std::size_t i = 0; i < fits.size(); ++i)
      msg += degenerate[i] ? " [zero-residual]" : (fits[i]->converged ? " [ok]" : " [non-converged]");
    throw std::runtime_error(msg);
  }
  bool any_converged = false;
  for (const auto& f : fits) any_converged = any_converged || f->converged;
  if (!any_converged) {
    std::string msg = "tune: no grid point converged;";
    for (std::size_t i = 0; i < fits.size(); ++i)
      msg += " (lambda=" + std::to_string(lambda_grid[i / nm]) +
             ",mu=" + std::to_string(mu_grid[i % nm]) + ":" +
             std::to_string(fits[i]->outer_iters) + " iters)";
    throw std::runtime_error(msg);
  }

  TuneResult out;
  out.lambda_star = lambda_grid[best / nm];
  out.mu_star = mu_grid[best % nm];
  out.fit = std::move(*fits[best]);
  out.bic_table.resize(nl, nm);
  for (int a = 0; a < nl; ++a)
    for (int b = 0; b < nm; ++b) out.bic_table(a, b) = bics[a * nm + b];
  return out;
}

}  // namespace stvar
