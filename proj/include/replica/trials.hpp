#pragma once

#include <cstdint>
#include <vector>

#include "replica/ensemble.hpp"
#include "replica/prior.hpp"
#include "replica/utility.hpp"
#include "replica/vector_map.hpp"

namespace replica {

struct TrialConfig {
  int n = 0;
  int k = 0;
  Prior prior;
  Utility utility;
  double lambda = 1.0;
  double lambda0 = 0.0;
  EnsembleSampler ensemble;
  VectorSolverOptions solver{};
  int trials = 1;
  std::uint64_t seed = 0;
};

struct TrialResult {
  int trial = 0;
  std::vector<double> x;     // source symbols, index j implicit
  std::vector<double> xhat;  // estimates
  double wall_seconds = 0.0;
  int iterations = 0;
  double objective = 0.0;
  double objective_at_truth = 0.0;
  bool solver_converged = false;
};

/// Seeded, reproducible Monte-Carlo loop: sample A, x ~ p_x^n,
/// z ~ N(0, lambda0 I), form y = A x + z, solve the vector MAP problem and
/// record per-symbol pairs. Each trial owns an independent random stream
/// derived from (seed, trial index); trials run concurrently on `workers`
/// threads and merge by trial index.
std::vector<TrialResult> run_trials(const TrialConfig& config, int workers = 0);

}  // namespace replica
