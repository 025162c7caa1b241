#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "replica/channel.hpp"
#include "replica/stats.hpp"

namespace replica {

struct ReportOptions {
  int quantile_bins = 8;
  std::size_t min_bin_count = 100;
  int null_replicas = 200;       // channel simulations per bin for calibration
  double cdf_alpha = 0.01;       // per-bin level of the calibrated threshold
  int homogeneity_groups = 4;
  double homogeneity_alpha = 0.01;
  int moment_table_order = 4;    // report moments with k + l <= this
  int moment_ci_order = 3;       // pass/fail moments with k + l <= this
  std::uint64_t calibration_seed = 20240915;
};

struct MomentRow {
  int k = 0, l = 0;
  double empirical = 0.0, std_error = 0.0, ci_lo = 0.0, ci_hi = 0.0;
  double predicted = 0.0;
  bool in_ci_scope = false;  // counted toward the moment criterion
  bool pass = true;
};

struct CdfRow {
  std::string bin;
  std::size_t count = 0;
  double distance = 0.0;
  double threshold = 0.0;  // null-calibrated acceptance threshold
  double p_value = 1.0;
  bool excluded = false;
  bool pass = true;
};

struct ComparisonReport {
  double mse = 0.0, mse_ci_lo = 0.0, mse_ci_hi = 0.0;
  double predicted_q = 0.0;
  bool mse_pass = false;

  std::vector<MomentRow> moments;
  bool moments_pass = false;

  std::vector<CdfRow> cdf;
  bool cdf_pass = false;

  double homogeneity_distance = 0.0;
  double homogeneity_p = 1.0;
  std::size_t homogeneity_tests = 0;
  int homogeneity_groups = 0;
  bool homogeneity_pass = false;

  bool overall_pass = false;
  std::string solution_id;  // content hash of the predict-stage solution
};

/// Assemble the full Monte-Carlo vs replica comparison: MSE against the
/// predicted q, the joint-moment table, per-bin conditional-cdf distances
/// against null-calibrated thresholds, and the index-homogeneity test.
ComparisonReport build_report(const JointSampleSet& samples,
                              const DecoupledChannel& channel,
                              const ReportOptions& opts = {},
                              const std::string& solution_id = "");

}  // namespace replica
