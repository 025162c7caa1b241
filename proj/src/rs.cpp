#include "replica/rs.hpp"

#include <cmath>
#include <string>

#include "replica/errors.hpp"
#include "replica/quadrature.hpp"

namespace replica {

RsEffective rs_effective_params(double chi, double q, double lambda, double lambda0,
                                const RTransform& rt) {
  if (!(chi >= 0.0 && q >= 0.0)) throw DomainError("rs_effective_params: need chi, q >= 0");
  if (!(lambda > 0.0)) throw DomainError("rs_effective_params: need lambda > 0");
  double w = -chi / lambda;
  double r = rt.value(w);
  if (!(r > 0.0))
    throw NumericError("rs_effective_params: R(-chi/lambda) = " + std::to_string(r) +
                       " is not positive");
  double rp = rt.derivative(w);
  // d/dchi { [lambda0 chi - lambda q] R(-chi/lambda) }
  //   = lambda0 R - (lambda0 chi - lambda q) R' / lambda
  double brace = lambda0 * r - (lambda0 * chi - lambda * q) * rp / lambda;
  return {brace / (r * r), lambda / r};
}

namespace {

constexpr double kLambda0Floor = 1e-12;
constexpr double kDegenerateStep = 1e-7;  // one-sided step in sqrt(lambda0_s)

struct RsGrid {
  std::vector<PriorNode> xnodes;
  Quadrature z;
};

struct RsUpdate {
  double q_next;
  double chi_next;
  double lambda0_s;  // clamped value actually used
  double lambda_s;
  bool clamped;
};

// One application of the fixed-point map at (chi, q).
RsUpdate rs_apply(const RsGrid& grid, const Utility& utility, double chi, double q,
                  double lambda, double lambda0, const RTransform& rt) {
  RsEffective eff = rs_effective_params(chi, q, lambda, lambda0, rt);
  RsUpdate up{};
  up.lambda_s = eff.lambda_s;
  up.clamped = eff.lambda0_s < kLambda0Floor;
  up.lambda0_s = up.clamped ? kLambda0Floor : eff.lambda0_s;

  const bool degenerate = eff.lambda0_s <= kLambda0Floor;
  double sig = std::sqrt(up.lambda0_s);
  double q_acc = 0.0, cz_acc = 0.0;
  for (const auto& xn : grid.xnodes) {
    for (std::size_t j = 0; j < grid.z.size(); ++j) {
      double zj = grid.z.nodes[j];
      double wij = xn.w * grid.z.weights[j];
      if (degenerate) {
        // noiseless limit: q from g(x); chi from a one-sided difference
        // quotient in sqrt(lambda0_s) (E (g-x) z / sqrt(l0s) -> derivative)
        double g0 = scalar_map(xn.x, eff.lambda_s, utility);
        double ge = scalar_map(xn.x + kDegenerateStep * zj, eff.lambda_s, utility);
        q_acc += wij * (g0 - xn.x) * (g0 - xn.x);
        cz_acc += wij * (ge - xn.x) * zj / kDegenerateStep;
      } else {
        double g = scalar_map(xn.x + sig * zj, eff.lambda_s, utility);
        double d = g - xn.x;
        q_acc += wij * d * d;
        cz_acc += wij * d * zj / sig;
      }
    }
  }
  up.q_next = q_acc;
  up.chi_next = eff.lambda_s * cz_acc;
  if (!std::isfinite(up.q_next) || !std::isfinite(up.chi_next))
    throw NumericError("rs_solve: non-finite update at chi=" + std::to_string(chi) +
                       " q=" + std::to_string(q));
  return up;
}

RsSolution rs_iterate(const RsGrid& grid, const Utility& utility, double lambda,
                      double lambda0, const RTransform& rt, const RsOptions& opts,
                      double chi0, double q0) {
  double chi = chi0, q = q0;
  double damping = opts.damping;
  double prev_defect = std::numeric_limits<double>::infinity();

  RsSolution best;
  best.residual = std::numeric_limits<double>::infinity();

  const double q_cap = 1e8 * std::max(1.0, q0);
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    RsUpdate up = rs_apply(grid, utility, chi, q, lambda, lambda0, rt);
    // defects in the forms of the stationarity equations
    double dq = std::abs(up.q_next - q);
    double dchi = std::sqrt(up.lambda0_s) * std::abs(up.chi_next - chi);
    double defect = std::max(dq, dchi);

    if (defect <= best.residual) {
      best.state = {chi, q};
      best.lambda0_s = up.lambda0_s;
      best.lambda_s = up.lambda_s;
      best.lambda0_s_clamped = up.clamped;
      best.residual = defect;
    }
    if (defect <= opts.tol) {
      ++it;
      break;
    }
    if (defect > prev_defect) damping = std::max(0.05, 0.5 * damping);
    prev_defect = defect;

    chi = (1.0 - damping) * chi + damping * std::max(0.0, up.chi_next);
    q = (1.0 - damping) * q + damping * up.q_next;
    if (!(q < q_cap))
      throw NumericError("rs_solve: diverging q=" + std::to_string(q) + " at iteration " +
                         std::to_string(it));
  }
  best.iterations = it;
  best.converged = best.residual <= opts.tol;
  return best;
}

}  // namespace

RsSolution rs_solve(const Prior& prior, const Utility& utility, double lambda,
                    double lambda0, const RTransform& rt, const RsOptions& opts) {
  if (!(lambda > 0.0)) throw ConfigError("rs_solve: lambda must be positive");
  if (!(lambda0 >= 0.0)) throw ConfigError("rs_solve: lambda0 must be nonnegative");

  RsGrid grid{prior.integration_nodes(opts.quad_order), gauss_hermite(opts.quad_order)};
  double chi0 = std::isnan(opts.init_chi) ? lambda : opts.init_chi;
  double q0 = std::isnan(opts.init_q) ? prior.second_moment() : opts.init_q;

  RsSolution sol = rs_iterate(grid, utility, lambda, lambda0, rt, opts, chi0, q0);

  if (opts.quad_doubling_check && sol.converged) {
    int order2 = std::min(2 * opts.quad_order, 200);
    RsGrid grid2{prior.integration_nodes(order2), gauss_hermite(order2)};
    RsOptions o2 = opts;
    o2.quad_doubling_check = false;
    RsSolution s2 = rs_iterate(grid2, utility, lambda, lambda0, rt, o2, sol.state.chi,
                               sol.state.q);
    sol.quad_doubling_delta = std::max(std::abs(s2.state.chi - sol.state.chi),
                                       std::abs(s2.state.q - sol.state.q));
  }
  return sol;
}

double rs_joint_moment(const RsSolution& sol, const Prior& prior, const Utility& utility,
                       int k, int l, int quad_order) {
  if (k < 0 || l < 0) throw DomainError("rs_joint_moment: need k, l >= 0");
  auto xnodes = prior.integration_nodes(quad_order);
  Quadrature z = gauss_hermite(quad_order);
  double sig = std::sqrt(sol.lambda0_s);
  double acc = 0.0;
  for (const auto& xn : xnodes) {
    for (std::size_t j = 0; j < z.size(); ++j) {
      double g = scalar_map(xn.x + sig * z.nodes[j], sol.lambda_s, utility);
      acc += xn.w * z.weights[j] * std::pow(g, k) * std::pow(xn.x, l);
    }
  }
  return acc;
}

DecoupledChannel rs_predicted_channel(const RsSolution& sol, const Prior& prior,
                                      const Utility& utility) {
  return DecoupledChannel::rs(prior, utility, sol.lambda0_s, sol.lambda_s);
}

}  // namespace replica
