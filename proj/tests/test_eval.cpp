#include <catch2/catch.hpp>

#include "stvar/eval.hpp"
#include "stvar/settings.hpp"

using namespace stvar;

TEST_CASE("support thresholding") {
  REQUIRE(!support(MatrixXd::Zero(3, 3)).any());

  MatrixXd tiny = MatrixXd::Zero(2, 2);
  tiny(0, 1) = 1e-300;
  REQUIRE(support(tiny, 0.0)(0, 1));
  REQUIRE(!support(tiny, 1e-8)(0, 1));

  // Monotone in tol: a larger threshold keeps a subset.
  Rng rng(2);
  MatrixXd b(5, 5);
  for (int i = 0; i < 25; ++i) b(i / 5, i % 5) = rng.bernoulli(0.5) ? rng.normal() : 0.0;
  const BoolMatrix loose = support(b, 1e-12);
  const BoolMatrix strict = support(b, 0.5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      if (strict(i, j)) REQUIRE(loose(i, j));
}

TEST_CASE("support agrees with the solver's exact sparsity") {
  Rng rng(6);
  LassoProblem prob;
  prob.design = MatrixXd(30, 9);
  prob.response = VectorXd(30);
  for (int i = 0; i < 30; ++i) {
    prob.response[i] = rng.normal();
    for (int j = 0; j < 9; ++j) prob.design(i, j) = rng.normal();
  }
  prob.loss_scale = 30.0;
  prob.penalty = 0.25;
  auto [coef, diag] = admm_lasso(prob, AdmmSettings{});
  REQUIRE(diag.converged);
  const MatrixXd as_matrix = Eigen::Map<const MatrixXd>(coef.data(), 3, 3);
  const BoolMatrix sup = support(as_matrix);
  for (int i = 0; i < 9; ++i) REQUIRE(sup(i % 3, i / 3) == (coef[i] != 0.0));
}

TEST_CASE("metrics formulas") {
  SECTION("perfect recovery") {
    const MetricRecord m = metrics({5, 5, 0, 0});
    REQUIRE(m.sen == 1.0);
    REQUIRE(m.spc == 1.0);
    REQUIRE(m.acc == 1.0);
    REQUIRE(m.f1 == 1.0);
    REQUIRE(m.mcc == Approx(1.0));
  }
  SECTION("direct evaluation") {
    const MetricRecord m = metrics({2, 2, 1, 1});
    REQUIRE(m.sen == Approx(2.0 / 3.0));
    REQUIRE(m.spc == Approx(2.0 / 3.0));
    REQUIRE(m.acc == Approx(2.0 / 3.0));
    REQUIRE(m.f1 == Approx(2.0 / 3.0));
    REQUIRE(m.mcc == Approx(1.0 / 3.0));
  }
  SECTION("all-negative sentinel convention") {
    const MetricRecord m = metrics({0, 9, 0, 0});
    REQUIRE(std::isnan(m.sen));
    REQUIRE(std::isnan(m.f1));
    REQUIRE(std::isnan(m.mcc));
    REQUIRE(m.spc == 1.0);
    REQUIRE(m.acc == 1.0);
  }
  SECTION("ranges over random counts") {
    Rng rng(88);
    for (int trial = 0; trial < 200; ++trial) {
      ConfusionCounts c{static_cast<long>(rng.uniform(0, 20)),
                        static_cast<long>(rng.uniform(0, 20)),
                        static_cast<long>(rng.uniform(0, 20)),
                        static_cast<long>(rng.uniform(0, 20))};
      const MetricRecord m = metrics(c);
      if (!std::isnan(m.f1)) {
        REQUIRE(m.f1 >= 0.0);
        REQUIRE(m.f1 <= 1.0);
      }
      if (!std::isnan(m.mcc)) {
        REQUIRE(m.mcc >= -1.0 - 1e-12);
        REQUIRE(m.mcc <= 1.0 + 1e-12);
      }
    }
  }
}

TEST_CASE("confusion counts sum to the comparison size") {
  Rng rng(14);
  BoolMatrix est(6, 6), truth(6, 6);
  for (int i = 0; i < 36; ++i) {
    est(i / 6, i % 6) = rng.bernoulli(0.4);
    truth(i / 6, i % 6) = rng.bernoulli(0.3);
  }
  const ConfusionCounts c = confusion(est, truth);
  REQUIRE(c.total() == 36);
}

TEST_CASE("rel_error") {
  Rng rng(7);
  MatrixXd truth(4, 4);
  for (int i = 0; i < 16; ++i) truth(i / 4, i % 4) = rng.normal();
  REQUIRE(rel_error(truth, truth) == 0.0);
  REQUIRE(rel_error(MatrixXd::Zero(4, 4), truth) == Approx(1.0));
  REQUIRE(rel_error(1.1 * truth, truth) == Approx(0.1).margin(1e-12));
  REQUIRE_THROWS_AS(rel_error(truth, MatrixXd::Zero(4, 4)), std::invalid_argument);
}

namespace {

BenchmarkConfig easy_config() {
  BenchmarkConfig cfg;
  cfg.name = "easy";
  cfg.sim.m = 2;
  cfg.sim.p = 3;
  cfg.sim.T = 20000;
  cfg.sim.rho_target = 0.8;
  cfg.sim.c_centroids = 1;
  cfg.lambda_grid = {0.01};
  cfg.mu_grid = {0.01};
  cfg.baseline_grid = {0.01};
  return cfg;
}

}  // namespace

TEST_CASE("run_benchmark recovers an easy instance in one replication") {
  const BenchmarkRow row = run_benchmark(easy_config(), Estimator::proposed, 1, 42);
  REQUIRE(row.failures == 0);
  REQUIRE(row.mean.sen >= 0.99);
  REQUIRE(row.mean_rel_err <= 0.05);
  REQUIRE(row.sd.sen == 0.0);  // single replication
}

TEST_CASE("run_benchmark is deterministic and aggregation is reproducible") {
  BenchmarkConfig cfg = easy_config();
  cfg.sim.T = 400;  // keep it quick; determinism only
  const BenchmarkRow a = run_benchmark(cfg, Estimator::proposed, 3, 7);
  const BenchmarkRow b = run_benchmark(cfg, Estimator::proposed, 3, 7, /*workers=*/3);
  REQUIRE(a.reps.size() == b.reps.size());
  for (std::size_t r = 0; r < a.reps.size(); ++r) {
    REQUIRE(a.reps[r].metric.f1 == b.reps[r].metric.f1);
    REQUIRE(a.reps[r].rel_err == b.reps[r].rel_err);
    REQUIRE(a.reps[r].seed == b.reps[r].seed);
  }
  REQUIRE(a.mean.f1 == b.mean.f1);
  REQUIRE(a.sd.f1 == b.sd.f1);

  // Recompute the aggregate from the stored per-replication values.
  double sum = 0.0;
  for (const auto& rec : a.reps) sum += rec.metric.f1;
  const double mean = sum / a.reps.size();
  double ss = 0.0;
  for (const auto& rec : a.reps) ss += (rec.metric.f1 - mean) * (rec.metric.f1 - mean);
  REQUIRE(a.mean.f1 == mean);
  REQUIRE(a.sd.f1 == std::sqrt(ss / (a.reps.size() - 1)));
}

TEST_CASE("run_benchmark validates inputs") {
  REQUIRE_THROWS_AS(run_benchmark(easy_config(), Estimator::proposed, 0, 1),
                    std::invalid_argument);
}

TEST_CASE("run_benchmark errors out past the failure budget") {
  BenchmarkConfig cfg = easy_config();
  cfg.sim.T = 60;
  cfg.baseline_grid.clear();  // every baseline replication throws
  REQUIRE_THROWS_WITH(run_benchmark(cfg, Estimator::baseline, 3, 1),
                      Catch::Contains("failed replications"));
}

TEST_CASE("benchmark presets cover the published table") {
  const auto names = benchmark_setting_names();
  REQUIRE(names.size() == 12);
  const BenchmarkConfig a1 = benchmark_preset("A.1");
  REQUIRE(a1.sim.p == 20);
  REQUIRE(a1.sim.m == 5);
  REQUIRE(a1.sim.T == 500);
  REQUIRE(a1.sim.rho_target == 0.8);
  const BenchmarkConfig c2 = benchmark_preset("C.2");
  REQUIRE(c2.sim.p == 40);
  REQUIRE(c2.sim.rho_target == 0.5);
  REQUIRE_THROWS_WITH(benchmark_preset("Z.9"), Catch::Contains("A.1"));
}
