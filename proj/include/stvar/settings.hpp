#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "stvar/eval.hpp"

namespace stvar {

// Dimension-scaled default penalty grids. The upper ends sit at the
// sample-size scalings sqrt(log m / T) and sqrt((log m + log p) / T); the
// grids extend well below them because the factorized penalty acts on each
// coordinate through the geometric mean of the two levels, which shifts the
// useful range downward.
inline std::vector<double> default_lambda_grid(int m, int p, int T, int points = 5) {
  (void)p;
  const double base = std::sqrt(std::log(std::max(m, 2)) / static_cast<double>(T));
  std::vector<double> grid;
  const double lo = 0.03, hi = 1.0;
  for (int i = 0; i < points; ++i) {
    const double f = points == 1 ? 1.0
                                 : lo * std::pow(hi / lo, i / static_cast<double>(points - 1));
    grid.push_back(base * f);
  }
  return grid;
}

inline std::vector<double> default_mu_grid(int m, int p, int T, int points = 5) {
  const double base = std::sqrt((std::log(std::max(m, 2)) + std::log(std::max(p, 2))) /
                                static_cast<double>(T));
  std::vector<double> grid;
  const double lo = 0.03, hi = 1.0;
  for (int i = 0; i < points; ++i) {
    const double f = points == 1 ? 1.0
                                 : lo * std::pow(hi / lo, i / static_cast<double>(points - 1));
    grid.push_back(base * f);
  }
  return grid;
}

inline std::vector<double> default_baseline_grid(int m, int p, int T, int points = 9) {
  const double base =
      std::sqrt(std::log(static_cast<double>(m) * p) / static_cast<double>(T));
  std::vector<double> grid;
  const double lo = 1.0 / 32.0, hi = 2.0;
  for (int i = 0; i < points; ++i) {
    const double f = points == 1 ? 1.0
                                 : lo * std::pow(hi / lo, i / static_cast<double>(points - 1));
    grid.push_back(base * f);
  }
  return grid;
}

inline std::vector<std::string> benchmark_setting_names() {
  return {"A.1", "A.2", "A.3", "A.4", "A.5", "A.6",
          "B.1", "B.2", "B.3", "B.4", "C.1", "C.2"};
}

// Named experiment settings: (p, m, T, rho) per row, everything else at the
// generator defaults.
inline BenchmarkConfig benchmark_preset(const std::string& name) {
  struct Row {
    const char* name;
    int p, m, T;
    double rho;
  };
  static const Row rows[] = {
      {"A.1", 20, 5, 500, 0.8},  {"A.2", 40, 5, 500, 0.8},  {"A.3", 60, 5, 500, 0.8},
      {"A.4", 20, 20, 500, 0.8}, {"A.5", 40, 20, 500, 0.8}, {"A.6", 60, 20, 500, 0.8},
      {"B.1", 20, 20, 300, 0.8}, {"B.2", 40, 20, 300, 0.8}, {"B.3", 20, 20, 800, 0.8},
      {"B.4", 40, 20, 800, 0.8}, {"C.1", 20, 20, 500, 0.5}, {"C.2", 40, 20, 500, 0.5}};
  for (const auto& r : rows) {
    if (name != r.name) continue;
    BenchmarkConfig cfg;
    cfg.name = name;
    cfg.sim.p = r.p;
    cfg.sim.m = r.m;
    cfg.sim.T = r.T;
    cfg.sim.rho_target = r.rho;
    cfg.sim.sigma = 1.0;
    // Generator geometry for the experiment rows: many loosely spread
    // clusters with a short edge cutoff keep the admissible pair count
    // stable across draws, and well-filled blocks keep every true entry
    // large enough to survive information-criterion selection.
    cfg.sim.c_centroids = std::max(1, (13 * r.p) / 20);
    cfg.sim.cluster_sd = 1.0;
    cfg.sim.threshold_frac = 0.08;
    cfg.sim.theta_density = 0.73;
    cfg.lambda_grid = default_lambda_grid(r.m, r.p, r.T);
    cfg.mu_grid = default_mu_grid(r.m, r.p, r.T);
    cfg.baseline_grid = default_baseline_grid(r.m, r.p, r.T);
    return cfg;
  }
  std::string valid;
  for (const auto& n : benchmark_setting_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw std::invalid_argument("unknown setting '" + name + "'; valid names: " + valid);
}

}  // namespace stvar
