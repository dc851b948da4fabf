// Command-line front end: simulate / fit / tune / bench / eval with JSON
// configs, CSV data files, and seed-reproducible outputs.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "stvar/stvar.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

void reject_unknown_keys(const json& cfg, const std::set<std::string>& known,
                         const std::string& command) {
  for (auto it = cfg.begin(); it != cfg.end(); ++it)
    if (!known.count(it.key()))
      throw ConfigError("unknown config key '" + it.key() + "' for command '" + command + "'");
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  auto in = stvar::io::open_in(path);
  json cfg;
  try {
    in >> cfg;
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse config " + path + ": " + e.what());
  }
  if (!cfg.is_object()) throw ConfigError("config must be a JSON object: " + path);
  return cfg;
}

template <typename T>
T get_or(const json& cfg, const std::string& key, T fallback) {
  if (!cfg.contains(key)) return fallback;
  try {
    return cfg.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

stvar::AdmmSettings admm_from_config(const json& cfg) {
  stvar::AdmmSettings s;
  if (!cfg.contains("admm")) return s;
  const json& a = cfg.at("admm");
  reject_unknown_keys(a, {"rho0", "alpha_ratio", "eps_pri", "eps_dual", "max_iter"}, "admm");
  s.rho0 = get_or(a, "rho0", s.rho0);
  s.alpha_ratio = get_or(a, "alpha_ratio", s.alpha_ratio);
  s.eps_pri = get_or(a, "eps_pri", s.eps_pri);
  s.eps_dual = get_or(a, "eps_dual", s.eps_dual);
  s.max_iter = get_or(a, "max_iter", s.max_iter);
  return s;
}

void write_manifest(const fs::path& dir, const std::string& command, std::uint64_t seed,
                    json resolved_config) {
  // Output location and worker count never influence results; keeping them
  // out of the manifest makes reruns comparable byte for byte.
  resolved_config.erase("out");
  resolved_config.erase("workers");
  json manifest;
  manifest["tool"] = "stvar";
  manifest["version"] = stvar::version;
  manifest["command"] = command;
  manifest["seed"] = seed;
  manifest["config"] = resolved_config;
  manifest["config_hash"] = stvar::io::config_hash(resolved_config);
  auto out = stvar::io::open_out(dir / "manifest.json");
  out << manifest.dump(2) << "\n";
}

fs::path prepare_out_dir(const std::string& out) {
  if (out.empty()) throw ConfigError("--out is required");
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw stvar::io::IoError("cannot create output directory " + dir.string());
  return dir;
}

std::vector<double> parse_grid(const std::string& csv) {
  std::vector<double> grid;
  for (const auto& f : stvar::io::split_csv_line(csv)) grid.push_back(stvar::io::parse_double(f));
  return grid;
}

json grid_to_json(const std::vector<double>& g) {
  json out = json::array();
  for (double v : g) out.push_back(v);
  return out;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string config_path, out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int m = -1, p = -1, T = -1, centroids = -1, burn_in = -1, lag = -1;
  double rho = -1.0, sigma = -1.0;
};

json ground_truth_json(const stvar::GroundTruth& truth, const stvar::SimulationConfig& cfg) {
  json root;
  root["m"] = cfg.m;
  root["p"] = cfg.p;
  root["d"] = cfg.d_lag;
  root["rho_target"] = cfg.rho_target;
  root["sigma"] = cfg.sigma;
  json edges = json::array();
  for (auto [s, t] : truth.graph.pairs) edges.push_back({s + 1, t + 1});
  root["graph"] = {{"p", truth.graph.p}, {"edges", edges}};
  json coords = json::array();
  for (const auto& c : *truth.graph.coords) coords.push_back({c.x(), c.y()});
  root["coords"] = coords;
  json lags = json::array();
  for (int l = 0; l < truth.d_lag; ++l) {
    json lag;
    lag["gamma"] = stvar::io::matrix_to_json(truth.gamma_star[l].values);
    lag["theta"] = stvar::io::matrix_to_json(stvar::blocks_dense(truth.theta_star[l]));
    lag["b"] = stvar::io::matrix_to_json(truth.b_star[l].values);
    lags.push_back(std::move(lag));
  }
  root["lags"] = lags;
  return root;
}

int cmd_simulate(const SimulateArgs& args) {
  json cfg = load_config(args.config_path);
  reject_unknown_keys(cfg,
                      {"m", "p", "T", "rho", "sigma", "centroids", "burn_in", "lag",
                       "threshold_frac", "cluster_sd", "theta_density", "seed", "out",
                       "workers"},
                      "simulate");
  stvar::SimulationConfig sim;
  sim.m = args.m > 0 ? args.m : get_or(cfg, "m", 2);
  sim.p = args.p > 0 ? args.p : get_or(cfg, "p", 4);
  sim.T = args.T >= 0 ? args.T : get_or(cfg, "T", 200);
  sim.rho_target = args.rho > 0 ? args.rho : get_or(cfg, "rho", 0.8);
  sim.sigma = args.sigma > 0 ? args.sigma : get_or(cfg, "sigma", 1.0);
  sim.c_centroids = args.centroids > 0 ? args.centroids
                                       : get_or(cfg, "centroids", std::max(1, sim.p / 5));
  sim.burn_in = args.burn_in >= 0 ? args.burn_in : get_or(cfg, "burn_in", 200);
  sim.d_lag = args.lag > 0 ? args.lag : get_or(cfg, "lag", 1);
  sim.threshold_frac = get_or(cfg, "threshold_frac", sim.threshold_frac);
  sim.cluster_sd = get_or(cfg, "cluster_sd", sim.cluster_sd);
  sim.theta_density = get_or(cfg, "theta_density", sim.theta_density);
  const std::uint64_t seed = args.seed_set ? args.seed : get_or(cfg, "seed", std::uint64_t{0});
  const std::string out = !args.out.empty() ? args.out : get_or(cfg, "out", std::string());
  sim.seed = seed;
  try {
    sim.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }

  const fs::path dir = prepare_out_dir(out);
  auto [truth, series] = stvar::simulate_dataset(sim, seed);
  stvar::io::write_trajectory_csv(dir / "trajectory.csv", series, sim.m, sim.p);
  {
    auto gt = stvar::io::open_out(dir / "ground_truth.json");
    gt << ground_truth_json(truth, sim).dump(2) << "\n";
  }
  json resolved = {{"m", sim.m},
                   {"p", sim.p},
                   {"T", sim.T},
                   {"rho", sim.rho_target},
                   {"sigma", sim.sigma},
                   {"centroids", sim.c_centroids},
                   {"burn_in", sim.burn_in},
                   {"lag", sim.d_lag},
                   {"threshold_frac", sim.threshold_frac},
                   {"cluster_sd", sim.cluster_sd},
                   {"theta_density", sim.theta_density},
                   {"seed", seed},
                   {"out", out}};
  write_manifest(dir, "simulate", seed, resolved);
  std::cout << "wrote " << (dir / "trajectory.csv").string() << ", ground_truth.json, manifest.json\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// fit / tune
// ---------------------------------------------------------------------------

struct FitArgs {
  std::string config_path, out, input, graph, weights_method, weights_file;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = -1, lag = -1;
  double lambda = -1.0, mu = -1.0, c1 = -1.0, c2 = -1.0;
  std::string lambda_grid, mu_grid;
  bool tune_mode = false;
};

struct LoadedProblem {
  stvar::StackedData data;
  stvar::SpatialGraph graph;
  stvar::WeightMatrix weights;
  int m = 0, p = 0, d = 1;
};

// Accepts either a plain graph file or a ground-truth JSON archive.
stvar::SpatialGraph load_graph_any(const std::string& path) {
  auto in = stvar::io::open_in(path);
  char first = 0;
  in >> first;
  if (first != '{') return stvar::io::read_graph_file(path);
  in.seekg(0);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw stvar::io::IoError("cannot parse " + path + ": " + e.what());
  }
  const int p = doc.at("graph").at("p").get<int>();
  std::vector<std::pair<int, int>> edges;
  for (const auto& e : doc.at("graph").at("edges"))
    edges.emplace_back(e.at(0).get<int>() - 1, e.at(1).get<int>() - 1);
  std::optional<std::vector<Eigen::Vector2d>> coords;
  if (doc.contains("coords")) {
    coords.emplace();
    for (const auto& c : doc.at("coords"))
      coords->emplace_back(c.at(0).get<double>(), c.at(1).get<double>());
  }
  return stvar::SpatialGraph(p, std::move(edges), std::move(coords));
}

LoadedProblem load_problem(const json& cfg, const FitArgs& args) {
  const std::string input = !args.input.empty() ? args.input : get_or(cfg, "input", std::string());
  const std::string graph_path =
      !args.graph.empty() ? args.graph : get_or(cfg, "graph", std::string());
  if (input.empty()) throw ConfigError("missing input trajectory (--input or config 'input')");
  if (graph_path.empty()) throw ConfigError("missing graph file (--graph or config 'graph')");
  if (!fs::exists(input)) throw stvar::io::IoError("input file does not exist: " + input);
  if (!fs::exists(graph_path))
    throw stvar::io::IoError("graph file does not exist: " + graph_path);

  LoadedProblem prob;
  auto series = stvar::io::read_trajectory_csv(input, &prob.m, &prob.p);
  prob.graph = load_graph_any(graph_path);
  if (prob.graph.p != prob.p)
    throw ConfigError("dimension mismatch: trajectory has p=" + std::to_string(prob.p) +
                      " locations but graph has p=" + std::to_string(prob.graph.p));
  prob.d = args.lag > 0 ? args.lag : get_or(cfg, "lag", 1);
  if (static_cast<int>(series.size()) < prob.d + 1)
    throw ConfigError("trajectory too short for lag " + std::to_string(prob.d));
  prob.data = stvar::stack_design_lagged(series, prob.m, prob.p, prob.d);

  const std::string wfile =
      !args.weights_file.empty() ? args.weights_file : get_or(cfg, "weights_file", std::string());
  const std::string method = !args.weights_method.empty()
                                 ? args.weights_method
                                 : get_or(cfg, "weights", std::string("distance"));
  const double c1 = args.c1 >= 0 ? args.c1 : get_or(cfg, "c1", 1.0);
  const double c2 = args.c2 >= 0 ? args.c2 : get_or(cfg, "c2", 1.0);
  if (!wfile.empty()) {
    prob.weights = stvar::WeightMatrix(stvar::io::read_matrix_csv(wfile));
  } else if (method == "distance") {
    if (!prob.graph.coords)
      throw ConfigError("distance weights need a coords section in the graph file");
    prob.weights = stvar::distance_weights(*prob.graph.coords, c1);
  } else if (method == "jaccard") {
    prob.weights = stvar::jaccard_weights(prob.graph, c2);
  } else {
    throw ConfigError("unknown weights method '" + method + "' (use distance or jaccard)");
  }
  try {
    stvar::validate_weights(prob.weights, prob.graph);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return prob;
}

json fit_summary(const stvar::FitResult& fit, const LoadedProblem& prob) {
  json s;
  s["converged"] = fit.converged;
  s["outer_iters"] = fit.outer_iters;
  s["objective_final"] = fit.objective;
  s["loss_final"] = fit.loss_final;
  s["m"] = prob.m;
  s["p"] = prob.p;
  s["d"] = prob.d;
  s["T"] = prob.data.T;
  s["max_kkt"] = fit.max_kkt;
  s["nonconverged_solves"] = fit.nonconverged_solves;
  s["max_containment_violation"] = fit.max_containment_violation;
  s["max_renorm_drift"] = fit.max_renorm_drift;
  json obj = json::array(), delta = json::array(), loss = json::array();
  for (const auto& rec : fit.trace) {
    obj.push_back(rec.f_after_balance);
    if (rec.iter > 0) delta.push_back(rec.delta);
    loss.push_back(rec.loss);
  }
  s["objective_trace"] = obj;
  s["delta_trace"] = delta;
  s["loss_trace"] = loss;
  return s;
}

int cmd_fit(const FitArgs& args) {
  json cfg = load_config(args.config_path);
  std::set<std::string> known = {"input",  "graph",    "weights_file", "weights", "c1",
                                 "c2",     "lambda0",  "mu0",          "eps_acs", "max_outer",
                                 "admm",   "seed",     "out",          "workers", "lag"};
  if (args.tune_mode) {
    known.insert("lambda_grid");
    known.insert("mu_grid");
  } else {
    known.insert("lambda");
    known.insert("mu");
  }
  reject_unknown_keys(cfg, known, args.tune_mode ? "tune" : "fit");

  LoadedProblem prob = load_problem(cfg, args);
  stvar::FitSettings settings;
  settings.admm = admm_from_config(cfg);
  settings.lambda0 = get_or(cfg, "lambda0", 0.0);
  settings.mu0 = get_or(cfg, "mu0", 0.0);
  settings.eps_acs = get_or(cfg, "eps_acs", 0.0);
  settings.max_outer = get_or(cfg, "max_outer", 50);
  const int workers = args.workers > 0
                          ? args.workers
                          : get_or(cfg, "workers",
                                   static_cast<int>(std::thread::hardware_concurrency()));
  const std::uint64_t seed = args.seed_set ? args.seed : get_or(cfg, "seed", std::uint64_t{0});
  const std::string out = !args.out.empty() ? args.out : get_or(cfg, "out", std::string());
  const fs::path dir = prepare_out_dir(out);

  stvar::FitResult fit;
  json resolved;
  if (args.tune_mode) {
    std::vector<double> lgrid = !args.lambda_grid.empty()
                                    ? parse_grid(args.lambda_grid)
                                    : get_or(cfg, "lambda_grid", std::vector<double>());
    std::vector<double> mgrid = !args.mu_grid.empty()
                                    ? parse_grid(args.mu_grid)
                                    : get_or(cfg, "mu_grid", std::vector<double>());
    if (lgrid.empty())
      lgrid = stvar::default_lambda_grid(prob.m, prob.p, prob.data.T);
    if (mgrid.empty()) mgrid = stvar::default_mu_grid(prob.m, prob.p, prob.data.T);
    settings.lambda = lgrid.front();
    settings.mu = mgrid.front();
    stvar::TuneResult tuned =
        stvar::tune(prob.data, prob.graph, prob.weights, lgrid, mgrid, settings, workers);
    fit = std::move(tuned.fit);
    resolved["lambda_grid"] = grid_to_json(lgrid);
    resolved["mu_grid"] = grid_to_json(mgrid);
    resolved["lambda_star"] = tuned.lambda_star;
    resolved["mu_star"] = tuned.mu_star;
  } else {
    settings.lambda = args.lambda > 0 ? args.lambda : get_or(cfg, "lambda", -1.0);
    settings.mu = args.mu > 0 ? args.mu : get_or(cfg, "mu", -1.0);
    if (settings.lambda <= 0 || settings.mu <= 0)
      throw ConfigError("fit needs positive --lambda and --mu (or config keys)");
    try {
      settings.validate();
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
    fit = stvar::acs_fit(prob.data, prob.graph, prob.weights, settings);
    resolved["lambda"] = settings.lambda;
    resolved["mu"] = settings.mu;
  }

  // Factors are archived in the canonical unit-norm form; the assembled
  // transition matrix is unchanged by the fold.
  auto [gamma_norm, theta_norm] = stvar::normalize_blocks(fit.gamma_hat, fit.theta_hat);
  stvar::io::write_matrix_csv(dir / "gamma_hat.csv", gamma_norm.values);
  stvar::io::write_matrix_csv(dir / "theta_hat.csv", stvar::blocks_dense(theta_norm));
  stvar::io::write_matrix_csv(dir / "b_hat.csv", fit.b_hat.values);
  json summary = fit_summary(fit, prob);
  if (resolved.contains("lambda_star")) {
    summary["lambda_star"] = resolved["lambda_star"];
    summary["mu_star"] = resolved["mu_star"];
  }
  {
    auto s = stvar::io::open_out(dir / "summary.json");
    s << summary.dump(2) << "\n";
  }
  resolved["input"] = !args.input.empty() ? args.input : get_or(cfg, "input", std::string());
  resolved["graph"] = !args.graph.empty() ? args.graph : get_or(cfg, "graph", std::string());
  resolved["lag"] = prob.d;
  resolved["seed"] = seed;
  resolved["out"] = out;
  write_manifest(dir, args.tune_mode ? "tune" : "fit", seed, resolved);
  std::cout << (fit.converged ? "converged" : "did not converge") << " after "
            << fit.outer_iters << " outer iterations\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchArgs {
  std::string config_path, out, setting, estimator, weights_method;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int reps = -1, workers = -1, lag = -1;
};

std::string metric_field(double v) {
  return std::isnan(v) ? "nan" : stvar::io::format_double(v);
}

void append_row_csv(std::ostream& out, const std::string& setting, const std::string& rep,
                    const stvar::MetricRecord& m, double rel_err, double wall_s) {
  out << setting << "," << rep << "," << metric_field(m.sen) << "," << metric_field(m.spc)
      << "," << metric_field(m.acc) << "," << metric_field(m.f1) << ","
      << metric_field(m.mcc) << "," << metric_field(rel_err) << ","
      << stvar::io::format_double(wall_s) << "\n";
}

void write_bench_rows(std::ostream& out, const stvar::BenchmarkRow& row) {
  const std::string tag = row.setting + "/" + stvar::estimator_name(row.estimator);
  for (const auto& rec : row.reps) {
    if (rec.failed) {
      out << tag << "," << rec.rep << ",failed,failed,failed,failed,failed,failed,"
          << stvar::io::format_double(rec.wall_s) << "\n";
      continue;
    }
    append_row_csv(out, tag, std::to_string(rec.rep), rec.metric, rec.rel_err, rec.wall_s);
  }
  stvar::MetricRecord sd = row.sd;
  append_row_csv(out, tag, "mean", row.mean, row.mean_rel_err, row.wall_s_total);
  append_row_csv(out, tag, "sd", sd, row.sd_rel_err, 0.0);
}

int cmd_bench(const BenchArgs& args) {
  json cfg = load_config(args.config_path);
  reject_unknown_keys(cfg,
                      {"setting", "reps", "estimator", "m", "p", "T", "rho", "sigma",
                       "centroids", "burn_in", "threshold_frac", "cluster_sd",
                       "theta_density", "weights", "c1", "c2", "lambda_grid", "mu_grid",
                       "baseline_grid", "eps_acs", "max_outer", "admm", "seed", "out",
                       "workers", "lag"},
                      "bench");
  const std::string setting =
      !args.setting.empty() ? args.setting : get_or(cfg, "setting", std::string());
  stvar::BenchmarkConfig bench;
  if (!setting.empty()) {
    try {
      bench = stvar::benchmark_preset(setting);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  } else {
    bench.name = "custom";
    bench.sim.m = get_or(cfg, "m", 2);
    bench.sim.p = get_or(cfg, "p", 4);
    bench.sim.T = get_or(cfg, "T", 200);
    bench.sim.rho_target = get_or(cfg, "rho", 0.8);
    bench.sim.c_centroids = get_or(cfg, "centroids", std::max(1, bench.sim.p / 5));
    bench.lambda_grid =
        stvar::default_lambda_grid(bench.sim.m, bench.sim.p, bench.sim.T);
    bench.mu_grid = stvar::default_mu_grid(bench.sim.m, bench.sim.p, bench.sim.T);
    bench.baseline_grid =
        stvar::default_baseline_grid(bench.sim.m, bench.sim.p, bench.sim.T);
  }
  bench.sim.sigma = get_or(cfg, "sigma", bench.sim.sigma);
  bench.sim.burn_in = get_or(cfg, "burn_in", bench.sim.burn_in);
  bench.sim.threshold_frac = get_or(cfg, "threshold_frac", bench.sim.threshold_frac);
  bench.sim.cluster_sd = get_or(cfg, "cluster_sd", bench.sim.cluster_sd);
  bench.sim.theta_density = get_or(cfg, "theta_density", bench.sim.theta_density);
  bench.sim.d_lag = args.lag > 0 ? args.lag : get_or(cfg, "lag", 1);
  bench.weights_method = !args.weights_method.empty() ? args.weights_method
                                                      : get_or(cfg, "weights", bench.weights_method);
  bench.c1 = get_or(cfg, "c1", bench.c1);
  bench.c2 = get_or(cfg, "c2", bench.c2);
  if (cfg.contains("lambda_grid")) bench.lambda_grid = cfg["lambda_grid"].get<std::vector<double>>();
  if (cfg.contains("mu_grid")) bench.mu_grid = cfg["mu_grid"].get<std::vector<double>>();
  if (cfg.contains("baseline_grid"))
    bench.baseline_grid = cfg["baseline_grid"].get<std::vector<double>>();
  bench.fit.eps_acs = get_or(cfg, "eps_acs", 0.0);
  bench.fit.max_outer = get_or(cfg, "max_outer", 50);
  bench.fit.admm = admm_from_config(cfg);

  const int reps = args.reps > 0 ? args.reps : get_or(cfg, "reps", 10);
  const std::string estimator =
      !args.estimator.empty() ? args.estimator : get_or(cfg, "estimator", std::string("proposed"));
  const std::uint64_t seed = args.seed_set ? args.seed : get_or(cfg, "seed", std::uint64_t{0});
  const std::string out = !args.out.empty() ? args.out : get_or(cfg, "out", std::string());
  const int workers = args.workers > 0
                          ? args.workers
                          : get_or(cfg, "workers",
                                   static_cast<int>(std::thread::hardware_concurrency()));
  if (estimator != "proposed" && estimator != "baseline" && estimator != "both")
    throw ConfigError("estimator must be proposed, baseline, or both");
  const fs::path dir = prepare_out_dir(out);

  std::vector<stvar::BenchmarkRow> rows;
  if (estimator == "proposed" || estimator == "both")
    rows.push_back(stvar::run_benchmark(bench, stvar::Estimator::proposed, reps, seed, workers));
  if (estimator == "baseline" || estimator == "both")
    rows.push_back(stvar::run_benchmark(bench, stvar::Estimator::baseline, reps, seed, workers));

  {
    auto csv = stvar::io::open_out(dir / "bench.csv");
    csv << "setting,rep,SEN,SPC,ACC,F1,MCC,RelErr,wall_s\n";
    for (const auto& row : rows) write_bench_rows(csv, row);
  }
  json resolved = {{"setting", bench.name}, {"reps", reps},   {"estimator", estimator},
                   {"seed", seed},          {"out", out},     {"lag", bench.sim.d_lag},
                   {"weights", bench.weights_method},         {"sigma", bench.sim.sigma}};
  resolved["lambda_grid"] = grid_to_json(bench.lambda_grid);
  resolved["mu_grid"] = grid_to_json(bench.mu_grid);
  resolved["baseline_grid"] = grid_to_json(bench.baseline_grid);
  write_manifest(dir, "bench", seed, resolved);
  for (const auto& row : rows)
    std::cout << row.setting << "/" << stvar::estimator_name(row.estimator)
              << ": mean F1 = " << row.mean.f1 << ", mean RelErr = " << row.mean_rel_err
              << " (" << row.failures << " failures)\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string config_path, out, fit_dir, truth_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

int cmd_eval(const EvalArgs& args) {
  json cfg = load_config(args.config_path);
  reject_unknown_keys(cfg, {"fit", "truth", "out", "seed", "setting_name", "workers"}, "eval");
  const std::string fit_dir =
      !args.fit_dir.empty() ? args.fit_dir : get_or(cfg, "fit", std::string());
  const std::string truth_path =
      !args.truth_path.empty() ? args.truth_path : get_or(cfg, "truth", std::string());
  if (fit_dir.empty() || truth_path.empty())
    throw ConfigError("eval needs --fit DIR and --truth PATH");
  const fs::path b_hat_path = fs::path(fit_dir) / "b_hat.csv";
  if (!fs::exists(b_hat_path))
    throw stvar::io::IoError("fit archive is missing " + b_hat_path.string());
  if (!fs::exists(truth_path))
    throw stvar::io::IoError("ground truth file does not exist: " + truth_path);

  const stvar::MatrixXd b_hat = stvar::io::read_matrix_csv(b_hat_path);
  json truth_doc;
  {
    auto in = stvar::io::open_in(truth_path);
    in >> truth_doc;
  }
  const int d = truth_doc.at("d").get<int>();
  const auto& lags = truth_doc.at("lags");
  stvar::MatrixXd b_true;
  for (int l = 0; l < d; ++l) {
    stvar::MatrixXd bl = stvar::io::matrix_from_json(lags.at(l).at("b"));
    if (l == 0) b_true.resize(bl.rows(), bl.cols() * d);
    b_true.middleCols(l * bl.cols(), bl.cols()) = bl;
  }
  if (b_hat.rows() != b_true.rows() || b_hat.cols() != b_true.cols())
    throw ConfigError("shape mismatch: fit is " + std::to_string(b_hat.rows()) + "x" +
                      std::to_string(b_hat.cols()) + " but truth is " +
                      std::to_string(b_true.rows()) + "x" + std::to_string(b_true.cols()));

  const auto counts = stvar::confusion(stvar::support(b_hat), stvar::support(b_true));
  const auto m = stvar::metrics(counts);
  const double rel = stvar::rel_error(b_hat, b_true);
  const std::string setting = get_or(cfg, "setting_name", std::string("eval"));
  const std::string out = !args.out.empty() ? args.out : get_or(cfg, "out", std::string());
  const fs::path dir = prepare_out_dir(out);
  {
    auto csv = stvar::io::open_out(dir / "metrics.csv");
    csv << "setting,rep,SEN,SPC,ACC,F1,MCC,RelErr,wall_s\n";
    append_row_csv(csv, setting, "0", m, rel, 0.0);
  }
  const std::uint64_t seed = args.seed_set ? args.seed : get_or(cfg, "seed", std::uint64_t{0});
  json resolved = {{"fit", fit_dir}, {"truth", truth_path}, {"out", out}, {"seed", seed}};
  write_manifest(dir, "eval", seed, resolved);
  std::cout << "SEN=" << m.sen << " F1=" << m.f1 << " RelErr=" << rel << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured estimation of multivariate spatio-temporal VAR processes"};
  app.require_subcommand(1);

  SimulateArgs sim_args;
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic system and trajectory");
  sim->add_option("--config", sim_args.config_path);
  sim->add_option("--seed", sim_args.seed)->each([&](const std::string&) { sim_args.seed_set = true; });
  sim->add_option("--out", sim_args.out);
  sim->add_option("--m", sim_args.m);
  sim->add_option("--p", sim_args.p);
  sim->add_option("--T", sim_args.T);
  sim->add_option("--rho", sim_args.rho);
  sim->add_option("--sigma", sim_args.sigma);
  sim->add_option("--centroids", sim_args.centroids);
  sim->add_option("--burn-in", sim_args.burn_in);
  sim->add_option("--lag", sim_args.lag);

  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "Fit at fixed penalties");
  FitArgs tune_args;
  tune_args.tune_mode = true;
  auto* tune_cmd = app.add_subcommand("tune", "Grid search penalties by BIC, then fit");
  for (auto [cmd, a] : {std::pair{fit, &fit_args}, std::pair{tune_cmd, &tune_args}}) {
    cmd->add_option("--config", a->config_path);
    cmd->add_option("--seed", a->seed)->each([a](const std::string&) { a->seed_set = true; });
    cmd->add_option("--out", a->out);
    cmd->add_option("--workers", a->workers);
    cmd->add_option("--lag", a->lag);
    cmd->add_option("--input", a->input);
    cmd->add_option("--graph", a->graph);
    cmd->add_option("--weights", a->weights_method);
    cmd->add_option("--weights-file", a->weights_file);
    cmd->add_option("--c1", a->c1);
    cmd->add_option("--c2", a->c2);
  }
  fit->add_option("--lambda", fit_args.lambda);
  fit->add_option("--mu", fit_args.mu);
  tune_cmd->add_option("--lambda-grid", tune_args.lambda_grid);
  tune_cmd->add_option("--mu-grid", tune_args.mu_grid);

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Replicated benchmark of an experiment setting");
  bench->add_option("--config", bench_args.config_path);
  bench->add_option("--seed", bench_args.seed)
      ->each([&](const std::string&) { bench_args.seed_set = true; });
  bench->add_option("--out", bench_args.out);
  bench->add_option("--workers", bench_args.workers);
  bench->add_option("--lag", bench_args.lag);
  bench->add_option("--setting", bench_args.setting);
  bench->add_option("--reps", bench_args.reps);
  bench->add_option("--estimator", bench_args.estimator);
  bench->add_option("--weights", bench_args.weights_method);

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Score a fit archive against stored ground truth");
  eval->add_option("--config", eval_args.config_path);
  eval->add_option("--seed", eval_args.seed)
      ->each([&](const std::string&) { eval_args.seed_set = true; });
  eval->add_option("--out", eval_args.out);
  eval->add_option("--fit", eval_args.fit_dir);
  eval->add_option("--truth", eval_args.truth_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_args);
    if (fit->parsed()) return cmd_fit(fit_args);
    if (tune_cmd->parsed()) return cmd_fit(tune_args);
    if (bench->parsed()) return cmd_bench(bench_args);
    if (eval->parsed()) return cmd_eval(eval_args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const stvar::io::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitConfig;
}
