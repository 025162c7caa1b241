#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "replica/prior.hpp"
#include "replica/rng.hpp"
#include "replica/utility.hpp"

namespace replica {

class DecoupledChannel;

/// Law of the estimate given a fixed source value. Holds whatever
/// precomputation the channel needs for fast cdf queries at one x.
class ConditionalLaw {
 public:
  /// P(xhat <= t | x)
  double cdf(double t) const;
  /// P(xhat < t | x)
  double cdf_left(double t) const;
  double sample(Rng& rng) const;

 private:
  friend class DecoupledChannel;
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

/// Executable model of the replica-predicted scalar system: the source symbol
/// plus effective noise feeds the scalar MAP estimator. One Gaussian tap under
/// the symmetric ansatz; a second, conditionally tilted tap when symmetry is
/// broken.
class DecoupledChannel {
 public:
  static DecoupledChannel rs(Prior prior, Utility utility, double lambda0_s,
                             double lambda_s);
  static DecoupledChannel one_rsb(Prior prior, Utility utility, double lambda0_s,
                                  double lambda1_s, double lambda_s, double mu);

  bool two_tap() const { return two_tap_; }
  double lambda0_s() const { return lambda0_s_; }
  double lambda1_s() const { return lambda1_s_; }
  double lambda_s() const { return lambda_s_; }
  double mu() const { return mu_; }
  const Prior& prior() const { return prior_; }
  const Utility& utility() const { return utility_; }

  /// Draw one (x, xhat) pair.
  std::pair<double, double> sample(Rng& rng) const;
  /// Draw xhat conditioned on x.
  double sample_estimate(double x, Rng& rng) const;

  ConditionalLaw conditional(double x) const;
  double conditional_cdf(double x, double t, bool left_limit = false) const;

  /// E[ xhat^k x^l ] under the channel (quadrature).
  double moment(int k, int l, int quad_order = 61) const;
  /// E[ (xhat - x)^2 ].
  double predicted_q(int quad_order = 61) const;

 private:
  DecoupledChannel(Prior prior, Utility utility);

  Prior prior_;
  Utility utility_;
  bool two_tap_ = false;
  double lambda0_s_ = 0.0;
  double lambda1_s_ = 0.0;
  double lambda_s_ = 1.0;
  double mu_ = 0.0;
};

}  // namespace replica
