#include "replica/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "replica/errors.hpp"
#include "replica/numeric.hpp"

namespace replica {

int JointSampleSet::trial_count() const {
  int t = 0;
  for (int v : trial) t = std::max(t, v + 1);
  return t;
}

int JointSampleSet::symbols_per_trial() const {
  int n = 0;
  for (int v : index) n = std::max(n, v + 1);
  return n;
}

void JointSampleSet::validate() const {
  if (x.empty()) throw ConfigError("JointSampleSet: empty sample");
  if (x.size() != xhat.size() || x.size() != trial.size() || x.size() != index.size())
    throw ConfigError("JointSampleSet: ragged columns");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]) || !std::isfinite(xhat[i]))
      throw NumericError("JointSampleSet: non-finite value at row " + std::to_string(i));
}

JointSampleSet JointSampleSet::from_results(const std::vector<TrialResult>& results) {
  JointSampleSet s;
  for (const auto& r : results) {
    for (std::size_t j = 0; j < r.x.size(); ++j) {
      s.trial.push_back(r.trial);
      s.index.push_back(static_cast<int>(j));
      s.x.push_back(r.x[j]);
      s.xhat.push_back(r.xhat[j]);
    }
  }
  s.validate();
  return s;
}

MomentEstimate empirical_moment(const JointSampleSet& s, int k, int l) {
  if (k < 0 || l < 0) throw DomainError("empirical_moment: need k, l >= 0");
  if (s.x.empty()) throw ConfigError("empirical_moment: empty sample");
  if (k == 0 && l == 0) return {1.0, 0.0};

  int t_count = s.trial_count();
  std::vector<double> batch_sum(static_cast<std::size_t>(t_count), 0.0);
  std::vector<std::size_t> batch_n(static_cast<std::size_t>(t_count), 0);
  double total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    double v = std::pow(s.xhat[i], k) * std::pow(s.x[i], l);
    total += v;
    batch_sum[static_cast<std::size_t>(s.trial[i])] += v;
    batch_n[static_cast<std::size_t>(s.trial[i])] += 1;
  }
  MomentEstimate est;
  est.value = total / static_cast<double>(s.size());
  if (t_count >= 2) {
    double mean_of_means = 0.0;
    std::vector<double> means(batch_sum.size());
    for (std::size_t b = 0; b < batch_sum.size(); ++b) {
      means[b] = batch_sum[b] / static_cast<double>(batch_n[b]);
      mean_of_means += means[b];
    }
    mean_of_means /= static_cast<double>(t_count);
    double var = 0.0;
    for (double m : means) var += (m - mean_of_means) * (m - mean_of_means);
    var /= static_cast<double>(t_count - 1);
    est.std_error = std::sqrt(var / static_cast<double>(t_count));
  } else {
    double var = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      double v = std::pow(s.xhat[i], k) * std::pow(s.x[i], l) - est.value;
      var += v * v;
    }
    var /= static_cast<double>(s.size() - 1);
    est.std_error = std::sqrt(var / static_cast<double>(s.size()));
  }
  return est;
}

std::vector<ConditioningBin> make_conditioning_bins(const JointSampleSet& s,
                                                    const Prior& prior,
                                                    int quantile_bins) {
  std::vector<ConditioningBin> bins;
  std::vector<bool> taken(s.size(), false);

  for (const auto& atom : prior.atoms()) {
    ConditioningBin b;
    b.is_atom = true;
    b.atom_value = atom.value;
    b.lo = b.hi = atom.value;
    b.label = "atom:" + std::to_string(atom.value);
    for (std::size_t i = 0; i < s.size(); ++i)
      if (!taken[i] && s.x[i] == atom.value) {
        b.members.push_back(i);
        taken[i] = true;
      }
    if (!b.members.empty()) bins.push_back(std::move(b));
  }

  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (!taken[i]) rest.push_back(i);
  if (!rest.empty() && quantile_bins > 0) {
    std::sort(rest.begin(), rest.end(),
              [&](std::size_t a, std::size_t b) { return s.x[a] < s.x[b]; });
    std::size_t nb = std::min<std::size_t>(static_cast<std::size_t>(quantile_bins),
                                           rest.size());
    for (std::size_t b = 0; b < nb; ++b) {
      std::size_t lo = rest.size() * b / nb;
      std::size_t hi = rest.size() * (b + 1) / nb;
      if (lo >= hi) continue;
      ConditioningBin bin;
      bin.label = "q" + std::to_string(b + 1);
      bin.members.assign(rest.begin() + static_cast<std::ptrdiff_t>(lo),
                         rest.begin() + static_cast<std::ptrdiff_t>(hi));
      bin.lo = s.x[bin.members.front()];
      bin.hi = s.x[bin.members.back()];
      bins.push_back(std::move(bin));
    }
  }
  return bins;
}

namespace {

// sup_t |Fhat(t) - Fbar(t)| where Fbar averages the channel's conditional
// cdf over the bin's source values; the sup is attained at data points.
double bin_sup_distance(const std::vector<double>& sorted_xhat,
                        const std::vector<ConditionalLaw>& laws,
                        const std::vector<std::size_t>& law_mult) {
  const double m = static_cast<double>(sorted_xhat.size());
  double total_laws = 0.0;
  for (std::size_t c : law_mult) total_laws += static_cast<double>(c);
  double d = 0.0;
  std::size_t i = 0;
  while (i < sorted_xhat.size()) {
    // advance over duplicates; the empirical cdf jumps once per distinct t
    std::size_t j = i;
    while (j + 1 < sorted_xhat.size() && sorted_xhat[j + 1] == sorted_xhat[i]) ++j;
    double t = sorted_xhat[i];
    double fbar = 0.0, fbar_left = 0.0;
    for (std::size_t c = 0; c < laws.size(); ++c) {
      double w = static_cast<double>(law_mult[c]);
      fbar += w * laws[c].cdf(t);
      fbar_left += w * laws[c].cdf_left(t);
    }
    fbar /= total_laws;
    fbar_left /= total_laws;
    double fhat_hi = static_cast<double>(j + 1) / m;
    double fhat_lo = static_cast<double>(i) / m;
    d = std::max(d, std::max(fhat_hi - fbar, fbar_left - fhat_lo));
    i = j + 1;
  }
  return d;
}

}  // namespace

std::vector<CdfDistanceResult> conditional_cdf_distance(
    const JointSampleSet& s, const DecoupledChannel& channel,
    const std::vector<ConditioningBin>& bins, std::size_t min_count) {
  std::vector<CdfDistanceResult> out;
  for (const auto& bin : bins) {
    CdfDistanceResult r;
    r.bin = bin.label;
    r.count = bin.members.size();
    if (bin.members.size() < min_count) {
      r.excluded = true;
      out.push_back(std::move(r));
      continue;
    }
    // one conditional law per distinct source value
    std::map<double, std::size_t> counts;
    for (std::size_t i : bin.members) counts[s.x[i]] += 1;
    std::vector<ConditionalLaw> laws;
    std::vector<std::size_t> mult;
    laws.reserve(counts.size());
    for (const auto& [xv, c] : counts) {
      laws.push_back(channel.conditional(xv));
      mult.push_back(c);
    }
    std::vector<double> vals;
    vals.reserve(bin.members.size());
    for (std::size_t i : bin.members) vals.push_back(s.xhat[i]);
    std::sort(vals.begin(), vals.end());
    r.distance = bin_sup_distance(vals, laws, mult);
    r.p_value = ks_pvalue_one_sample(r.distance, vals.size());
    out.push_back(std::move(r));
  }
  return out;
}

double two_sample_ks(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw ConfigError("two_sample_ks: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    double t = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == t) ++i;
    while (j < b.size() && b[j] == t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

HomogeneityResult index_homogeneity(const JointSampleSet& s, int groups,
                                    const std::vector<ConditioningBin>& bins,
                                    std::size_t min_count) {
  if (groups < 2) throw ConfigError("index_homogeneity: need at least 2 groups");
  int n = s.symbols_per_trial();
  if (n < groups) throw ConfigError("index_homogeneity: more groups than symbols");

  auto group_of = [&](int idx) { return std::min(groups - 1, idx * groups / n); };
  const std::size_t per_cell_min = std::max<std::size_t>(30, min_count / static_cast<std::size_t>(groups));

  HomogeneityResult res;
  res.groups = groups;
  double min_p = 1.0;
  for (const auto& bin : bins) {
    std::vector<std::vector<double>> cells(static_cast<std::size_t>(groups));
    for (std::size_t i : bin.members)
      cells[static_cast<std::size_t>(group_of(s.index[i]))].push_back(s.xhat[i]);
    for (int g1 = 0; g1 < groups; ++g1)
      for (int g2 = g1 + 1; g2 < groups; ++g2) {
        const auto& a = cells[static_cast<std::size_t>(g1)];
        const auto& b = cells[static_cast<std::size_t>(g2)];
        if (a.size() < per_cell_min || b.size() < per_cell_min) continue;
        double d = two_sample_ks(a, b);
        double p = ks_pvalue_two_sample(d, a.size(), b.size());
        res.max_distance = std::max(res.max_distance, d);
        min_p = std::min(min_p, p);
        res.tests += 1;
      }
  }
  if (res.tests == 0)
    throw ConfigError("index_homogeneity: insufficient samples per group");
  res.p_value = std::min(1.0, static_cast<double>(res.tests) * min_p);
  return res;
}

}  // namespace replica
