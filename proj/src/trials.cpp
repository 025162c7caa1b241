#include "replica/trials.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "replica/errors.hpp"

namespace replica {

namespace {

TrialResult run_one(const TrialConfig& cfg, int trial) {
  auto t0 = std::chrono::steady_clock::now();
  Rng rng = make_rng(cfg.seed, static_cast<std::uint64_t>(trial));

  Eigen::MatrixXd a = cfg.ensemble.sample(rng);
  Eigen::VectorXd x(cfg.n);
  for (int j = 0; j < cfg.n; ++j) x(j) = cfg.prior.sample(rng);
  Eigen::VectorXd y = a * x;
  if (cfg.lambda0 > 0.0) {
    std::normal_distribution<double> noise(0.0, std::sqrt(cfg.lambda0));
    for (int i = 0; i < cfg.k; ++i) y(i) += noise(rng);
  }

  VectorMapResult sol = vector_map_solve(a, y, cfg.lambda, cfg.utility, cfg.solver);

  TrialResult res;
  res.trial = trial;
  res.x.assign(x.data(), x.data() + cfg.n);
  res.xhat.assign(sol.x.data(), sol.x.data() + cfg.n);
  res.iterations = sol.iterations;
  res.objective = sol.objective;
  res.objective_at_truth = map_objective(a, y, cfg.lambda, cfg.utility, x);
  res.solver_converged = sol.converged;
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace

std::vector<TrialResult> run_trials(const TrialConfig& cfg, int workers) {
  if (cfg.trials < 1) throw ConfigError("run_trials: need at least one trial");
  if (cfg.n < 1 || cfg.k < 1) throw ConfigError("run_trials: need n, k >= 1");
  if (cfg.ensemble.n() != cfg.n || cfg.ensemble.k() != cfg.k)
    throw ConfigError("run_trials: ensemble dimensions disagree with config");

  if (workers <= 0) {
    workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers <= 0) workers = 1;
  }
  workers = std::min(workers, cfg.trials);

  std::vector<TrialResult> results(static_cast<std::size_t>(cfg.trials));
  if (workers == 1) {
    for (int t = 0; t < cfg.trials; ++t) results[static_cast<std::size_t>(t)] = run_one(cfg, t);
    return results;
  }

  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::string error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      int t = next.fetch_add(1);
      if (t >= cfg.trials || failed.load()) return;
      try {
        results[static_cast<std::size_t>(t)] = run_one(cfg, t);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        failed.store(true);
        if (error.empty()) error = "trial " + std::to_string(t) + ": " + e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failed.load()) throw NumericError("run_trials: " + error);
  return results;
}

}  // namespace replica
