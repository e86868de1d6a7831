// SPDX-License-Identifier: Apache-2.0

#include "quickiva/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <thread>

namespace quickiva {

using json = nlohmann::ordered_json;

ExperimentConfig default_config(std::string_view experiment) {
  ExperimentConfig c;
  if (experiment == "extraction") {
    c.experiment = "extraction";
  } else if (experiment == "csv_extraction") {
    c.experiment = "csv_extraction";
    c.T = 3;
  } else if (experiment == "separation") {
    c.experiment = "separation";
    c.algorithm = "quickiva2";
    c.d = 5;
    c.Nb = 5000;
    c.trials = 100;
    c.max_iter = 50;
    c.tol = 0.0;  // fixed iteration budget
    c.init = "random";
  } else {
    throw ConfigError("unknown experiment: " + std::string(experiment));
  }
  return c;
}

namespace {

template <typename T>
void read_key(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig config_from_json_text(const std::string& text, const ExperimentConfig& base) {
  const json j = json::parse(text);
  ExperimentConfig c = base;
  if (j.contains("experiment") && j.at("experiment").get<std::string>() != base.experiment)
    c = default_config(j.at("experiment").get<std::string>());
  static const std::vector<std::string> known = {
      "experiment", "algorithm", "score",   "K",           "d",
      "T",          "Nb",        "trials",  "seed",        "init",
      "perturb_norm", "tol",     "max_iter", "hessian",    "mu",
      "ice",        "n_csv_sources", "alpha", "workers",   "out_dir"};
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("unknown config key: " + key);
  read_key(j, "algorithm", c.algorithm);
  read_key(j, "score", c.score);
  read_key(j, "K", c.K);
  read_key(j, "d", c.d);
  read_key(j, "T", c.T);
  read_key(j, "Nb", c.Nb);
  read_key(j, "trials", c.trials);
  read_key(j, "seed", c.seed);
  read_key(j, "init", c.init);
  read_key(j, "perturb_norm", c.perturb_norm);
  read_key(j, "tol", c.tol);
  read_key(j, "max_iter", c.max_iter);
  read_key(j, "hessian", c.hessian);
  read_key(j, "mu", c.mu);
  read_key(j, "ice", c.ice);
  read_key(j, "n_csv_sources", c.n_csv_sources);
  read_key(j, "alpha", c.alpha);
  read_key(j, "workers", c.workers);
  read_key(j, "out_dir", c.out_dir);
  return c;
}

std::string config_to_json_text(const ExperimentConfig& c) {
  json j;
  j["experiment"] = c.experiment;
  j["algorithm"] = c.algorithm;
  j["score"] = c.score;
  j["K"] = c.K;
  j["d"] = c.d;
  j["T"] = c.T;
  j["Nb"] = c.Nb;
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["init"] = c.init;
  j["perturb_norm"] = c.perturb_norm;
  j["tol"] = c.tol;
  j["max_iter"] = c.max_iter;
  j["hessian"] = c.hessian;
  j["mu"] = c.mu;
  j["ice"] = c.ice;
  j["n_csv_sources"] = c.n_csv_sources;
  j["alpha"] = c.alpha;
  j["workers"] = c.workers;
  j["out_dir"] = c.out_dir;
  return j.dump(2);
}

void validate(const ExperimentConfig& c) {
  if (c.experiment != "extraction" && c.experiment != "csv_extraction" &&
      c.experiment != "separation")
    throw ConfigError("unknown experiment: " + c.experiment);
  if (c.K < 1 || c.d < 1 || c.T < 1 || c.Nb < 1) throw ConfigError("dimensions must be positive");
  if (c.trials < 1) throw ConfigError("trials must be >= 1");
  if (c.max_iter < 0) throw ConfigError("max_iter must be >= 0");
  if (c.perturb_norm < 0.0) throw ConfigError("perturb_norm must be >= 0");
  if (c.mu <= 0.0) throw ConfigError("mu must be positive");
  if (c.init != "near_ideal" && c.init != "random") throw ConfigError("unknown init: " + c.init);
  if (c.score != "rational" && c.score != "norm") throw ConfigError("unknown score: " + c.score);
  if (c.hessian != "exact" && c.hessian != "approx")
    throw ConfigError("unknown hessian mode: " + c.hessian);

  if (c.experiment == "separation") {
    if (c.algorithm != "quickiva1" && c.algorithm != "quickiva2")
      throw ConfigError("separation requires quickiva1 or quickiva2");
    if (c.T != 1) throw ConfigError("separation requires T = 1");
    if (!(c.alpha > 0.0)) throw ConfigError("alpha must be positive");
  } else {
    if (c.algorithm != "quickive1" && c.algorithm != "quickive2" && c.algorithm != "gradient")
      throw ConfigError("extraction requires quickive1, quickive2 or gradient");
    if (c.algorithm == "quickive1" && c.T > 1)
      throw ConfigError("quickive1 is limited to T = 1");
    if (c.experiment == "csv_extraction") {
      if (c.T < 2) throw ConfigError("csv_extraction requires T >= 2");
      if (c.n_csv_sources < 1 || c.n_csv_sources > c.d)
        throw ConfigError("n_csv_sources must lie in [1, d]");
    }
    if (c.experiment == "extraction" && c.T != 1)
      throw ConfigError("extraction requires T = 1 (use csv_extraction)");
    if (c.max_iter < 1) throw ConfigError("max_iter must be >= 1");
    if (!(c.tol > 0.0)) throw ConfigError("tol must be positive");
    if (c.algorithm == "quickive2" && c.hessian == "approx")
      throw ConfigError("the approximate Hessian applies to quickive1 only");
  }
}

namespace {

int resolve_workers(int workers) {
  if (workers > 0) return workers;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

// Deterministic parallel map over trial indices.
template <typename Fn>
void parallel_trials(int trials, int workers, Fn&& fn) {
  std::atomic<int> next{0};
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= trials) return;
      fn(i);
    }
  };
  const int n = std::min(resolve_workers(workers), trials);
  if (n <= 1) {
    worker();
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(n);
  for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

std::vector<Vector> make_init(Rng& rng, const Dataset& data, const ExperimentConfig& c) {
  std::vector<Vector> init(data.K);
  for (int k = 0; k < data.K; ++k) {
    if (c.init == "near_ideal") {
      const Vector w_true = data.truth->demixing[k * data.T].row(0).adjoint();
      Vector pert = rng.complex_gaussian_vector(data.d);
      if (pert.norm() > 0.0) pert *= c.perturb_norm / pert.norm();
      init[k] = w_true + pert;
    } else {
      init[k] = rng.complex_gaussian_vector(data.d);
    }
  }
  return init;
}

struct ExtractionTrial {
  std::vector<double> sir_db;      // one per evaluated mixture
  std::vector<int> iterations;     // one per algorithm run
  std::vector<double> wall_ms;     // one per algorithm run
  bool failed = false;
};

ExtractionTrial run_one_extraction_trial(const ExperimentConfig& c, int trial) {
  Rng rng(Rng::split(c.seed, static_cast<std::uint64_t>(trial)));
  const Dataset data =
      (c.T == 1) ? generate_iva_dataset(rng, c.K, c.d, c.Nb)
                 : generate_csv_dataset(rng, c.K, c.d, c.T, c.Nb, c.n_csv_sources);
  const std::vector<Vector> init = make_init(rng, data, c);

  const ScoreFunction& score = score_by_name(c.score);
  const StoppingRule stopping{c.tol, c.max_iter};
  RunOptions options;
  options.hessian = hessian_mode_by_name(c.hessian);
  options.mu = c.mu;
  const Algorithm algorithm = algorithm_by_name(c.algorithm);

  ExtractionTrial out;
  if (!c.ice) {
    const CovarianceSet cov = CovarianceSet::from_dataset(data);
    const RunResult r = run_extraction(algorithm, data, cov, score, init, stopping, options);
    out.failed = r.outcome.failed;
    out.wall_ms.push_back(r.outcome.wall_ms);
    out.iterations.push_back(r.outcome.iterations);
    for (int k = 0; k < data.K; ++k) out.sir_db.push_back(r.outcome.sir_db[k]);
  } else {
    // K = 1 variant applied to each mixture on its own.
    for (int k = 0; k < data.K; ++k) {
      const Dataset sub = data.single_mixture(k);
      const CovarianceSet cov = CovarianceSet::from_dataset(sub);
      const RunResult r = run_extraction(algorithm, sub, cov, score, {init[k]}, stopping, options);
      out.failed |= r.outcome.failed;
      out.wall_ms.push_back(r.outcome.wall_ms);
      out.iterations.push_back(r.outcome.iterations);
      out.sir_db.push_back(r.outcome.sir_db[0]);
    }
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return (n % 2) ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << content;
}

}  // namespace

ExtractionBatch run_extraction_batch(const ExperimentConfig& config) {
  validate(config);
  std::vector<ExtractionTrial> trials(config.trials);
  parallel_trials(config.trials, config.workers,
                  [&](int i) { trials[i] = run_one_extraction_trial(config, i); });

  ExtractionBatch batch;
  for (const ExtractionTrial& t : trials) {
    batch.failed_trials += t.failed ? 1 : 0;
    batch.wall_ms.insert(batch.wall_ms.end(), t.wall_ms.begin(), t.wall_ms.end());
    batch.sir_db.insert(batch.sir_db.end(), t.sir_db.begin(), t.sir_db.end());
    batch.iterations.insert(batch.iterations.end(), t.iterations.begin(), t.iterations.end());
  }
  return batch;
}

SeparationBatch run_separation_batch(const ExperimentConfig& config) {
  validate(config);
  struct Trial {
    std::vector<std::pair<double, double>> trajectory;
    std::vector<double> isr_db;
    bool failed = false;
  };
  std::vector<Trial> trials(config.trials);
  const IvaVariant variant = iva_variant_by_name(config.algorithm);
  const ScoreFunction& score = score_by_name(config.score);

  parallel_trials(config.trials, config.workers, [&](int i) {
    Rng rng(Rng::split(config.seed, static_cast<std::uint64_t>(i)));
    const Dataset data =
        generate_separation_dataset(rng, config.K, config.d, config.Nb, config.alpha);
    std::vector<Matrix> init(config.K);
    for (int k = 0; k < config.K; ++k) init[k] = random_mixing(rng, config.d).inverse();
    SeparationOptions options;
    options.hessian = hessian_mode_by_name(config.hessian);
    const StoppingRule stopping{config.tol, config.max_iter};
    const SeparationRun run = run_separation(variant, data, score, init, stopping, options);
    trials[i] = Trial{run.trajectory, run.outcome.isr_db, run.outcome.failed};
  });

  SeparationBatch batch;
  for (Trial& t : trials) {
    batch.failed_trials += t.failed ? 1 : 0;
    batch.trajectories.push_back(std::move(t.trajectory));
    batch.final_isr_db.insert(batch.final_isr_db.end(), t.isr_db.begin(), t.isr_db.end());
  }
  return batch;
}

ExperimentSummary run_experiment(const ExperimentConfig& config) {
  validate(config);
  std::filesystem::create_directories(config.out_dir);
  const std::filesystem::path out(config.out_dir);

  ExperimentSummary summary;
  json j;
  j["experiment"] = config.experiment;
  j["algorithm"] = config.algorithm;
  j["score"] = config.score;
  j["seed"] = config.seed;
  j["trials"] = config.trials;

  if (config.experiment == "separation") {
    const SeparationBatch batch = run_separation_batch(config);
    const auto rows = aggregate_trajectory(batch.trajectories);
    write_file(out / "trajectory.csv", trajectory_csv(rows, config.algorithm));
    write_file(out / "histogram.csv",
               histogram_csv(aggregate_histogram(batch.final_isr_db), config.algorithm,
                             config.experiment));
    summary.records = static_cast<long>(batch.final_isr_db.size());
    summary.failed_trials = batch.failed_trials;
    double acc = 0.0;
    for (double v : batch.final_isr_db) acc += v;
    summary.final_isr_db_mean = batch.final_isr_db.empty() ? 0.0 : acc / summary.records;
    j["records"] = summary.records;
    j["failed_trials"] = summary.failed_trials;
    j["final_isr_db_mean"] = summary.final_isr_db_mean;
    j["iterations"] = config.max_iter;
  } else {
    const ExtractionBatch batch = run_extraction_batch(config);
    write_file(out / "histogram.csv",
               histogram_csv(aggregate_histogram(batch.sir_db), config.algorithm,
                             config.experiment));
    summary.records = static_cast<long>(batch.sir_db.size());
    summary.failed_trials = batch.failed_trials;
    long succ = 0, other = 0;
    for (double v : batch.sir_db) {
      const Classification c = classify_outcome(v);
      succ += c == Classification::kSuccess;
      other += c == Classification::kOtherSource;
    }
    summary.success_fraction = summary.records ? static_cast<double>(succ) / summary.records : 0.0;
    summary.other_source_fraction =
        summary.records ? static_cast<double>(other) / summary.records : 0.0;
    std::vector<double> iters(batch.iterations.begin(), batch.iterations.end());
    summary.median_iterations = median(iters);
    double wall = 0.0;
    long total_iters = 0;
    for (double w : batch.wall_ms) wall += w;
    for (int it : batch.iterations) total_iters += it;
    summary.mean_wall_ms_per_iteration = total_iters ? wall / total_iters : 0.0;
    j["records"] = summary.records;
    j["failed_trials"] = summary.failed_trials;
    j["success_fraction"] = summary.success_fraction;
    j["other_source_fraction"] = summary.other_source_fraction;
    j["median_iterations"] = summary.median_iterations;
    // Timing key; excluded from determinism comparisons.
    j["mean_wall_ms_per_iteration"] = summary.mean_wall_ms_per_iteration;
  }

  write_file(out / "summary.json", j.dump(2) + "\n");
  return summary;
}

}  // namespace quickiva
