#pragma once

#include <limits>

#include "replica/channel.hpp"
#include "replica/prior.hpp"
#include "replica/spectral.hpp"
#include "replica/utility.hpp"

namespace replica {

/// Order parameters of the symmetric ansatz.
struct RsState {
  double chi;
  double q;
};

struct RsEffective {
  double lambda0_s;  // effective noise power of the decoupled channel
  double lambda_s;   // effective estimation parameter
};

struct RsOptions {
  double damping = 0.5;      // halved automatically when the defect grows
  double tol = 1e-9;         // on the two fixed-point defects
  int max_iter = 20000;
  int quad_order = 61;
  // initial state; NaN means chi = lambda, q = prior second moment
  double init_chi = std::numeric_limits<double>::quiet_NaN();
  double init_q = std::numeric_limits<double>::quiet_NaN();
  // re-solve at doubled quadrature order and report the state shift
  bool quad_doubling_check = true;
};

struct RsSolution {
  RsState state{};
  double lambda0_s = 0.0;
  double lambda_s = 0.0;
  /// max of the two fixed-point defect magnitudes at the reported state:
  /// |q - E(g-x)^2| and |sqrt(lambda0_s) chi - lambda_s E(g-x)z|
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  /// lambda0_s hit its positivity floor at the final state
  bool lambda0_s_clamped = false;
  /// state shift under doubled quadrature order (NaN when the check is off)
  double quad_doubling_delta = std::numeric_limits<double>::quiet_NaN();
};

/// Effective channel coefficients at a given state:
///   lambda_s  = lambda / R(-chi/lambda)
///   lambda0_s = R(-chi/lambda)^{-2} d/dchi { [lambda0 chi - lambda q] R(-chi/lambda) }
/// with the derivative expanded analytically and q held fixed.
RsEffective rs_effective_params(double chi, double q, double lambda, double lambda0,
                                const RTransform& rt);

/// Damped fixed-point iteration on (chi, q). Non-convergence is reported via
/// the flag, not an exception.
RsSolution rs_solve(const Prior& prior, const Utility& utility, double lambda,
                    double lambda0, const RTransform& rt, const RsOptions& opts = {});

/// E[ g^k x^l ] under the converged channel.
double rs_joint_moment(const RsSolution& sol, const Prior& prior,
                       const Utility& utility, int k, int l, int quad_order = 61);

DecoupledChannel rs_predicted_channel(const RsSolution& sol, const Prior& prior,
                                      const Utility& utility);

}  // namespace replica
