#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "stvar/acs.hpp"
#include "stvar/baseline.hpp"
#include "stvar/parallel.hpp"
#include "stvar/simulate.hpp"
#include "stvar/weights.hpp"

namespace stvar {

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Entry support at tolerance tol (strictly greater). Solver iterates are
// exactly sparse, so the default only guards non-thresholded inputs.
inline BoolMatrix support(const MatrixXd& b, double tol = 1e-8) {
  if (tol < 0.0) throw std::invalid_argument("support: tol must be >= 0");
  return b.array().abs() > tol;
}

inline BoolMatrix support(const TransitionMatrix& b, double tol = 1e-8) {
  return support(b.values, tol);
}

struct ConfusionCounts {
  long tp = 0, tn = 0, fp = 0, fn = 0;
  long total() const { return tp + tn + fp + fn; }
};

inline ConfusionCounts confusion(const BoolMatrix& est, const BoolMatrix& truth) {
  if (est.rows() != truth.rows() || est.cols() != truth.cols())
    throw std::invalid_argument("confusion: shape mismatch");
  ConfusionCounts c;
  for (Eigen::Index j = 0; j < est.cols(); ++j)
    for (Eigen::Index i = 0; i < est.rows(); ++i) {
      if (truth(i, j))
        ++(est(i, j) ? c.tp : c.fn);
      else
        ++(est(i, j) ? c.fp : c.tn);
    }
  return c;
}

// Support-recovery metrics; 0/0 ratios are NaN sentinels and are excluded
// from any aggregation.
struct MetricRecord {
  double sen = std::numeric_limits<double>::quiet_NaN();
  double spc = std::numeric_limits<double>::quiet_NaN();
  double acc = std::numeric_limits<double>::quiet_NaN();
  double f1 = std::numeric_limits<double>::quiet_NaN();
  double mcc = std::numeric_limits<double>::quiet_NaN();
};

inline MetricRecord metrics(const ConfusionCounts& c) {
  if (c.tp < 0 || c.tn < 0 || c.fp < 0 || c.fn < 0)
    throw std::invalid_argument("metrics: negative count");
  MetricRecord m;
  const double tp = c.tp, tn = c.tn, fp = c.fp, fn = c.fn;
  if (tp + fn > 0) m.sen = tp / (tp + fn);
  if (tn + fp > 0) m.spc = tn / (tn + fp);
  if (c.total() > 0) m.acc = (tp + tn) / static_cast<double>(c.total());
  if (2 * tp + fp + fn > 0) m.f1 = 2 * tp / (2 * tp + fp + fn);
  const double denom =
      std::sqrt((tp + fp) * (tp + fn)) * std::sqrt((tn + fp) * (tn + fn));
  if (denom > 0) m.mcc = (tp * tn - fp * fn) / denom;
  return m;
}

inline double rel_error(const MatrixXd& est, const MatrixXd& truth) {
  if (est.rows() != truth.rows() || est.cols() != truth.cols())
    throw std::invalid_argument("rel_error: shape mismatch");
  const double norm = truth.norm();
  if (norm == 0.0) throw std::invalid_argument("rel_error: zero truth matrix");
  return (est - truth).norm() / norm;
}

inline double rel_error(const TransitionMatrix& est, const TransitionMatrix& truth) {
  return rel_error(est.values, truth.values);
}

// ---------------------------------------------------------------------------
// Replication benchmark harness
// ---------------------------------------------------------------------------

enum class Estimator { proposed, baseline };

inline std::string estimator_name(Estimator e) {
  return e == Estimator::proposed ? "proposed" : "baseline";
}

struct BenchmarkConfig {
  std::string name = "custom";
  SimulationConfig sim;
  std::string weights_method = "distance";  // "distance" | "jaccard"
  double c1 = 1.0;
  double c2 = 1.0;
  std::vector<double> lambda_grid;  // singleton = fixed penalty
  std::vector<double> mu_grid;
  FitSettings fit;
  std::vector<double> baseline_grid;
  BaselineSettings baseline;
};

struct ReplicationRecord {
  int rep = 0;
  std::uint64_t seed = 0;
  MetricRecord metric;
  double rel_err = std::numeric_limits<double>::quiet_NaN();
  double wall_s = 0.0;
  double lambda_star = 0.0;
  double mu_star = 0.0;
  bool converged = false;
  bool failed = false;
  std::string error;
  // Fit-level invariant diagnostics (proposed estimator only).
  double max_kkt = 0.0;
  int nonconverged_solves = 0;
  double max_descent_violation = -std::numeric_limits<double>::infinity();
  double max_containment_violation = 0.0;
  double max_renorm_drift = 0.0;
};

struct BenchmarkRow {
  std::string setting;
  Estimator estimator = Estimator::proposed;
  int replications = 0;
  int failures = 0;
  MetricRecord mean, sd;
  double mean_rel_err = std::numeric_limits<double>::quiet_NaN();
  double sd_rel_err = std::numeric_limits<double>::quiet_NaN();
  double wall_s_total = 0.0;
  std::vector<ReplicationRecord> reps;
  // Worst-case invariant diagnostics across replications.
  double max_kkt = 0.0;
  int nonconverged_solves = 0;
  double max_descent_violation = -std::numeric_limits<double>::infinity();
  double max_containment_violation = 0.0;
  double max_renorm_drift = 0.0;
};

namespace detail {

struct MeanSd {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double sd = std::numeric_limits<double>::quiet_NaN();
};

// Mean and sample sd over the defined (non-NaN) values.
inline MeanSd aggregate(const std::vector<double>& values) {
  double sum = 0.0;
  int n = 0;
  for (double v : values)
    if (!std::isnan(v)) {
      sum += v;
      ++n;
    }
  MeanSd out;
  if (n == 0) return out;
  out.mean = sum / n;
  if (n == 1) {
    out.sd = 0.0;
    return out;
  }
  double ss = 0.0;
  for (double v : values)
    if (!std::isnan(v)) ss += (v - out.mean) * (v - out.mean);
  out.sd = std::sqrt(ss / (n - 1));
  return out;
}

inline WeightMatrix build_weights(const BenchmarkConfig& cfg, const SpatialGraph& graph) {
  if (cfg.weights_method == "jaccard") return jaccard_weights(graph, cfg.c2);
  if (cfg.weights_method != "distance")
    throw std::invalid_argument("unknown weights method: " + cfg.weights_method);
  if (!graph.coords)
    throw std::invalid_argument("distance weights need coordinates");
  return distance_weights(*graph.coords, cfg.c1);
}

// Holdout-tuned two-step fit over the baseline penalty grid.
inline TransitionMatrix tuned_baseline(const StackedData& data, const SpatialGraph& graph,
                                       const BenchmarkConfig& cfg, double* lambda_star) {
  return twostep_fit_cv(data, graph, cfg.baseline_grid, cfg.baseline.admm, lambda_star);
}

inline ReplicationRecord run_replication(const BenchmarkConfig& cfg, Estimator which,
                                         int rep, std::uint64_t base_seed) {
  ReplicationRecord rec;
  rec.rep = rep;
  rec.seed = base_seed + static_cast<std::uint64_t>(rep);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    auto [truth, series] = simulate_dataset(cfg.sim, rec.seed);
    StackedData data = stack_design_lagged(series, cfg.sim.m, cfg.sim.p, cfg.sim.d_lag);
    const MatrixXd b_true = truth.stacked_b();
    MatrixXd b_est;
    if (which == Estimator::proposed) {
      const WeightMatrix w = build_weights(cfg, truth.graph);
      FitResult fit;
      if (cfg.lambda_grid.size() == 1 && cfg.mu_grid.size() == 1) {
        FitSettings s = cfg.fit;
        s.lambda = cfg.lambda_grid.front();
        s.mu = cfg.mu_grid.front();
        fit = acs_fit(data, truth.graph, w, s);
        rec.lambda_star = s.lambda;
        rec.mu_star = s.mu;
      } else {
        TuneResult tuned = tune(data, truth.graph, w, cfg.lambda_grid, cfg.mu_grid, cfg.fit);
        fit = std::move(tuned.fit);
        rec.lambda_star = tuned.lambda_star;
        rec.mu_star = tuned.mu_star;
      }
      rec.converged = fit.converged;
      rec.max_kkt = fit.max_kkt;
      rec.nonconverged_solves = fit.nonconverged_solves;
      rec.max_descent_violation = fit.max_descent_violation;
      rec.max_containment_violation = fit.max_containment_violation;
      rec.max_renorm_drift = fit.max_renorm_drift;
      b_est = fit.b_hat.values;
    } else {
      b_est = tuned_baseline(data, truth.graph, cfg, &rec.lambda_star).values;
      rec.converged = true;
    }
    rec.metric = metrics(confusion(support(b_est), support(b_true)));
    rec.rel_err = rel_error(b_est, b_true);
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.error = e.what();
  }
  rec.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

}  // namespace detail

// Seeded Monte Carlo: replication r uses seed base_seed + r, generates a
// fresh system and trajectory, fits the chosen estimator, and scores the
// recovered transition matrix against the truth.
inline BenchmarkRow run_benchmark(const BenchmarkConfig& cfg, Estimator which,
                                  int replications, std::uint64_t base_seed,
                                  int workers = 1) {
  if (replications < 1)
    throw std::invalid_argument("run_benchmark: replications must be >= 1");
  cfg.sim.validate();
  BenchmarkRow row;
  row.setting = cfg.name;
  row.estimator = which;
  row.replications = replications;
  row.reps.resize(replications);
  detail::parallel_for(replications, workers, [&](int r) {
    row.reps[r] = detail::run_replication(cfg, which, r, base_seed);
  });

  std::vector<double> sen, spc, acc, f1, mcc, rel;
  for (const auto& rec : row.reps) {
    if (rec.failed) {
      ++row.failures;
      continue;
    }
    sen.push_back(rec.metric.sen);
    spc.push_back(rec.metric.spc);
    acc.push_back(rec.metric.acc);
    f1.push_back(rec.metric.f1);
    mcc.push_back(rec.metric.mcc);
    rel.push_back(rec.rel_err);
    row.wall_s_total += rec.wall_s;
    row.max_kkt = std::max(row.max_kkt, rec.max_kkt);
    row.nonconverged_solves += rec.nonconverged_solves;
    row.max_descent_violation = std::max(row.max_descent_violation, rec.max_descent_violation);
    row.max_containment_violation =
        std::max(row.max_containment_violation, rec.max_containment_violation);
    row.max_renorm_drift = std::max(row.max_renorm_drift, rec.max_renorm_drift);
  }
  if (row.failures * 5 > replications) {
    std::string msg = "run_benchmark: too many failed replications:";
    for (const auto& rec : row.reps)
      if (rec.failed) msg += " [rep " + std::to_string(rec.rep) + ": " + rec.error + "]";
    throw std::runtime_error(msg);
  }
  auto fill = [](const std::vector<double>& v, double& mean, double& sd) {
    const auto agg = detail::aggregate(v);
    mean = agg.mean;
    sd = agg.sd;
  };
  fill(sen, row.mean.sen, row.sd.sen);
  fill(spc, row.mean.spc, row.sd.spc);
  fill(acc, row.mean.acc, row.sd.acc);
  fill(f1, row.mean.f1, row.sd.f1);
  fill(mcc, row.mean.mcc, row.sd.mcc);
  fill(rel, row.mean_rel_err, row.sd_rel_err);
  return row;
}

}  // namespace stvar
