#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "replica/channel.hpp"
#include "replica/prior.hpp"
#include "replica/trials.hpp"

namespace replica {

/// Per-symbol (x, xhat) pairs pooled across trials.
struct JointSampleSet {
  std::vector<int> trial;
  std::vector<int> index;
  std::vector<double> x;
  std::vector<double> xhat;

  std::size_t size() const { return x.size(); }
  int trial_count() const;
  int symbols_per_trial() const;  // n, inferred from the largest index
  void validate() const;          // nonempty, finite, consistent lengths

  static JointSampleSet from_results(const std::vector<TrialResult>& results);
};

struct MomentEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Mean of xhat^k x^l with a batch-means standard error (batches = trials).
MomentEstimate empirical_moment(const JointSampleSet& s, int k, int l);

/// A conditioning cell: exact source atom or a quantile bin of the
/// continuous part.
struct ConditioningBin {
  std::string label;
  bool is_atom = false;
  double atom_value = 0.0;
  double lo = 0.0, hi = 0.0;               // [lo, hi) for quantile bins
  std::vector<std::size_t> members;        // sample indices
};

/// Atoms of the prior become exact-match bins; remaining samples are split
/// into quantile bins. Bins below min_count are kept but flagged downstream.
std::vector<ConditioningBin> make_conditioning_bins(const JointSampleSet& s,
                                                    const Prior& prior,
                                                    int quantile_bins = 8);

struct CdfDistanceResult {
  std::string bin;
  std::size_t count = 0;
  double distance = 0.0;  // sup |empirical - predicted| over the bin
  double p_value = 1.0;   // asymptotic one-sample KS approximation
  bool excluded = false;  // below the minimum sample count
};

/// KS-type sup distance between the empirical conditional law of xhat in each
/// bin and the channel prediction averaged over the bin's source values.
std::vector<CdfDistanceResult> conditional_cdf_distance(
    const JointSampleSet& s, const DecoupledChannel& channel,
    const std::vector<ConditioningBin>& bins, std::size_t min_count = 100);

struct HomogeneityResult {
  double max_distance = 0.0;
  double p_value = 1.0;  // Bonferroni-adjusted over (bin, group-pair) tests
  int groups = 0;
  std::size_t tests = 0;
};

/// Pairwise two-sample KS between contiguous index groups, conditioned on
/// the source bins.
HomogeneityResult index_homogeneity(const JointSampleSet& s, int groups,
                                    const std::vector<ConditioningBin>& bins,
                                    std::size_t min_count = 100);

/// sup |F1 - F2| between two empirical samples (two-sample KS statistic).
double two_sample_ks(std::vector<double> a, std::vector<double> b);

}  // namespace replica
