#pragma once

#include <limits>
#include <string>
#include <vector>

#include "replica/channel.hpp"
#include "replica/prior.hpp"
#include "replica/quadrature.hpp"
#include "replica/rs.hpp"
#include "replica/spectral.hpp"
#include "replica/utility.hpp"

namespace replica {

/// Order parameters of the one-step broken ansatz; rho = chi + mu p.
struct OneRsbState {
  double chi;
  double p;
  double q;
  double mu;

  double rho() const { return chi + mu * p; }
};

struct OneRsbEffective {
  double lambda0_s;
  double lambda1_s;
  double lambda_s;
};

/// Effective coefficients at a given state:
///   lambda_s  = lambda / R(-chi/lambda)
///   lambda1_s = R(-chi/lambda)^{-2} [R(-chi/lambda) - R(-rho/lambda)] lambda / mu
///   lambda0_s = R(-chi/lambda)^{-2} d/drho { [lambda0 rho - lambda q + lambda p]
///               R(-rho/lambda) }     (q, p held fixed)
OneRsbEffective onersb_effective_params(const OneRsbState& state, double lambda,
                                        double lambda0, const RTransform& rt);

/// log of the unnormalized tilting factor of the second tap:
///   -mu { (1/2 lambda_s)[(y-g)^2 - (y-x)^2] + u(g) },
/// y = x + sqrt(lambda0_s) z0 + sqrt(lambda1_s) z1, g = scalar_map(y).
double tilt_log_factor(double x, double z0, double z1, double lambda0_s,
                       double lambda1_s, double lambda_s, double mu,
                       const Utility& utility);

/// Discretized tilted measure: per (x node, z0 node) row, normalized weights
/// over the z1 quadrature (Lambda * w1). Rows sum to 1.
struct TiltedGrid {
  std::vector<PriorNode> xnodes;
  Quadrature z0;
  Quadrature z1;
  std::vector<double> weights;     // [(i*n0 + j)*n1 + k], row-normalized
  std::vector<double> log_lambda;  // log of the normalized tilt, same layout
  std::vector<double> g;           // scalar MAP output per cell
  double lambda0_s, lambda1_s, lambda_s, mu;

  std::size_t nx() const { return xnodes.size(); }
  std::size_t n0() const { return z0.size(); }
  std::size_t n1() const { return z1.size(); }
  std::size_t cell(std::size_t i, std::size_t j, std::size_t k) const {
    return (i * n0() + j) * n1() + k;
  }
  /// weight of row (i, j) under p_x x Dz0
  double row_weight(std::size_t i, std::size_t j) const {
    return xnodes[i].w * z0.weights[j];
  }
  /// E log Lambda under the joint tilted law p_x(x) pi(z0) [Lambda pi(z1)]
  double e_log_lambda() const;
};

TiltedGrid build_tilted_grid(const OneRsbEffective& coeffs, double mu,
                             const Prior& prior, const Utility& utility,
                             int quad_order);

/// I(z1; x, z0) + D_KL(p_z1 || pi) computed directly from the discretized
/// joint law. Exists as an independent cross-check of the identity
/// I + D_KL = E log Lambda used by the solver.
double eq37_rhs_direct(const TiltedGrid& grid);

enum class OneRsbStatus {
  kRsb,            // converged with a positive second tap
  kCollapsedToRs,  // lambda1_s hit zero during iteration
  kNoRsbRoot,      // no sign change of the mu defect in the bracket
};

std::string to_string(OneRsbStatus s);

struct OneRsbOptions {
  double damping = 0.4;
  double inner_tol = 1e-12;      // raw state-update tolerance, inner loop
  int inner_max_iter = 20000;
  double tol = 1e-9;             // on the reported defects
  double mu_tol = 1e-9;          // |mu defect| target for the outer root
  int quad_order = 61;
  double mu_min = 1e-3;
  double mu_max = 50.0;
  int mu_grid = 24;              // geometric scan resolution for bracketing
  // inner initial state; NaN means chi = lambda, p = m2/2, q = m2
  double init_chi = std::numeric_limits<double>::quiet_NaN();
  double init_p = std::numeric_limits<double>::quiet_NaN();
  double init_q = std::numeric_limits<double>::quiet_NaN();
  bool quad_doubling_check = true;
};

struct OneRsbDefects {
  double q = 0.0;      // |q - E (g-x)^2 dF Dz0|
  double eq36a = 0.0;  // |chi + mu p - (lambda_s/sqrt(l0s)) E (g-x) z0 dF Dz0|
  double eq36b = 0.0;  // |chi + mu q - (lambda_s/sqrt(l1s)) E (g-x) z1 dF Dz0|
  double eq37 = 0.0;   // |mu stationarity defect|

  double max() const;
};

struct OneRsbSolution {
  OneRsbState state{};
  double lambda0_s = 0.0;
  double lambda1_s = 0.0;
  double lambda_s = 0.0;
  OneRsbDefects defects{};
  OneRsbStatus status = OneRsbStatus::kNoRsbRoot;
  bool converged = false;
  int inner_iterations = 0;  // total across the outer search
  int outer_evaluations = 0;
  /// largest |eq37_rhs_direct - E log Lambda| seen on any grid during the solve
  double max_eq37_identity_gap = 0.0;
  /// embedded symmetric solution (populated on collapse / no-root outcomes)
  RsSolution rs_fallback{};
  double quad_doubling_delta = std::numeric_limits<double>::quiet_NaN();
};

/// Nested solve: damped inner fixed point on (chi, p, q) at fixed mu, outer
/// bracketed root-finding on the mu stationarity defect, with continuation
/// (warm starts) along the mu scan. When the second tap vanishes or no root
/// is bracketed, the symmetric solution is returned embedded with p = 0.
OneRsbSolution onersb_solve(const Prior& prior, const Utility& utility, double lambda,
                            double lambda0, const RTransform& rt,
                            const OneRsbOptions& opts = {});

/// E[ g^k x^l ] under the tilted two-tap channel at the solution.
double onersb_joint_moment(const OneRsbSolution& sol, const Prior& prior,
                           const Utility& utility, int k, int l, int quad_order = 61);

DecoupledChannel onersb_predicted_channel(const OneRsbSolution& sol, const Prior& prior,
                                          const Utility& utility);

}  // namespace replica
