#include "replica/report.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "replica/errors.hpp"
#include "replica/numeric.hpp"
#include "replica/rng.hpp"

namespace replica {

namespace {

// Distribution of the bin statistic under the predicted channel at matched
// size and matched conditioning values; returns the (1 - alpha) quantile.
double calibrate_bin_threshold(const DecoupledChannel& channel,
                               const std::vector<double>& bin_x, int replicas,
                               double alpha, Rng& rng) {
  std::map<double, std::size_t> counts;
  for (double xv : bin_x) counts[xv] += 1;
  std::vector<ConditionalLaw> laws;
  std::vector<std::size_t> mult;
  for (const auto& [xv, c] : counts) {
    laws.push_back(channel.conditional(xv));
    mult.push_back(c);
  }
  std::vector<double> dist(static_cast<std::size_t>(replicas));
  std::vector<double> vals(bin_x.size());
  const double m = static_cast<double>(bin_x.size());
  for (int rep = 0; rep < replicas; ++rep) {
    std::size_t at = 0;
    for (std::size_t c = 0; c < laws.size(); ++c)
      for (std::size_t i = 0; i < mult[c]; ++i) vals[at++] = laws[c].sample(rng);
    std::sort(vals.begin(), vals.end());
    // same sup-distance computation as the observed statistic
    double d = 0.0;
    std::size_t i = 0;
    while (i < vals.size()) {
      std::size_t j = i;
      while (j + 1 < vals.size() && vals[j + 1] == vals[i]) ++j;
      double t = vals[i];
      double fbar = 0.0, fbar_left = 0.0;
      for (std::size_t c = 0; c < laws.size(); ++c) {
        double w = static_cast<double>(mult[c]);
        fbar += w * laws[c].cdf(t);
        fbar_left += w * laws[c].cdf_left(t);
      }
      fbar /= m;
      fbar_left /= m;
      d = std::max(d, std::max(static_cast<double>(j + 1) / m - fbar,
                               fbar_left - static_cast<double>(i) / m));
      i = j + 1;
    }
    dist[static_cast<std::size_t>(rep)] = d;
  }
  std::sort(dist.begin(), dist.end());
  double pos = (1.0 - alpha) * static_cast<double>(dist.size() - 1);
  std::size_t lo = static_cast<std::size_t>(pos);
  std::size_t hi = std::min(lo + 1, dist.size() - 1);
  double frac = pos - static_cast<double>(lo);
  return dist[lo] + frac * (dist[hi] - dist[lo]);
}

}  // namespace

ComparisonReport build_report(const JointSampleSet& samples,
                              const DecoupledChannel& channel, const ReportOptions& opts,
                              const std::string& solution_id) {
  samples.validate();
  ComparisonReport rep;
  rep.solution_id = solution_id;

  // --- MSE vs predicted q ---------------------------------------------------
  {
    int t_count = samples.trial_count();
    std::vector<double> batch_sum(static_cast<std::size_t>(t_count), 0.0);
    std::vector<std::size_t> batch_n(static_cast<std::size_t>(t_count), 0);
    double total = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      double d = samples.xhat[i] - samples.x[i];
      total += d * d;
      batch_sum[static_cast<std::size_t>(samples.trial[i])] += d * d;
      batch_n[static_cast<std::size_t>(samples.trial[i])] += 1;
    }
    rep.mse = total / static_cast<double>(samples.size());
    double se = 0.0;
    if (t_count >= 2) {
      double mom = 0.0;
      std::vector<double> means(batch_sum.size());
      for (std::size_t b = 0; b < means.size(); ++b) {
        means[b] = batch_sum[b] / static_cast<double>(batch_n[b]);
        mom += means[b];
      }
      mom /= static_cast<double>(t_count);
      double var = 0.0;
      for (double v : means) var += (v - mom) * (v - mom);
      var /= static_cast<double>(t_count - 1);
      se = std::sqrt(var / static_cast<double>(t_count));
    }
    rep.mse_ci_lo = rep.mse - 1.96 * se;
    rep.mse_ci_hi = rep.mse + 1.96 * se;
    rep.predicted_q = channel.predicted_q();
    rep.mse_pass = rep.predicted_q >= rep.mse_ci_lo && rep.predicted_q <= rep.mse_ci_hi;
  }

  // --- joint moments ----------------------------------------------------------
  rep.moments_pass = true;
  for (int total = 0; total <= opts.moment_table_order; ++total) {
    for (int k = total; k >= 0; --k) {
      int l = total - k;
      MomentRow row;
      row.k = k;
      row.l = l;
      MomentEstimate est = empirical_moment(samples, k, l);
      row.empirical = est.value;
      row.std_error = est.std_error;
      row.ci_lo = est.value - 1.96 * est.std_error;
      row.ci_hi = est.value + 1.96 * est.std_error;
      row.predicted = channel.moment(k, l);
      row.in_ci_scope = total <= opts.moment_ci_order;
      row.pass = row.predicted >= row.ci_lo && row.predicted <= row.ci_hi;
      if (row.in_ci_scope && !row.pass) rep.moments_pass = false;
      rep.moments.push_back(row);
    }
  }

  // --- conditional cdf distances with null-calibrated thresholds -------------
  auto bins = make_conditioning_bins(samples, channel.prior(), opts.quantile_bins);
  auto dists = conditional_cdf_distance(samples, channel, bins, opts.min_bin_count);
  Rng calib_rng = make_rng(opts.calibration_seed, 0);
  rep.cdf_pass = true;
  for (std::size_t b = 0; b < bins.size(); ++b) {
    CdfRow row;
    row.bin = dists[b].bin;
    row.count = dists[b].count;
    row.excluded = dists[b].excluded;
    row.distance = dists[b].distance;
    row.p_value = dists[b].p_value;
    if (!row.excluded) {
      std::vector<double> bin_x;
      bin_x.reserve(bins[b].members.size());
      for (std::size_t i : bins[b].members) bin_x.push_back(samples.x[i]);
      row.threshold = calibrate_bin_threshold(channel, bin_x, opts.null_replicas,
                                              opts.cdf_alpha, calib_rng);
      row.pass = row.distance <= row.threshold;
      if (!row.pass) rep.cdf_pass = false;
    }
    rep.cdf.push_back(std::move(row));
  }

  // --- index homogeneity -------------------------------------------------------
  {
    HomogeneityResult h =
        index_homogeneity(samples, opts.homogeneity_groups, bins, opts.min_bin_count);
    rep.homogeneity_distance = h.max_distance;
    rep.homogeneity_p = h.p_value;
    rep.homogeneity_tests = h.tests;
    rep.homogeneity_groups = h.groups;
    rep.homogeneity_pass = h.p_value > opts.homogeneity_alpha;
  }

  rep.overall_pass = rep.mse_pass && rep.moments_pass && rep.cdf_pass && rep.homogeneity_pass;
  return rep;
}

}  // namespace replica
