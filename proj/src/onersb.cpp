#include "replica/onersb.hpp"

#include <algorithm>
#include <cmath>

#include "replica/errors.hpp"
#include "replica/numeric.hpp"

namespace replica {

namespace {
constexpr double kLambda0Floor = 1e-12;
constexpr double kLambda1Floor = 1e-12;
}  // namespace

OneRsbEffective onersb_effective_params(const OneRsbState& state, double lambda,
                                        double lambda0, const RTransform& rt) {
  if (!(state.chi >= 0.0 && state.p >= 0.0 && state.q >= 0.0))
    throw DomainError("onersb_effective_params: need chi, p, q >= 0");
  if (!(state.mu > 0.0)) throw DomainError("onersb_effective_params: need mu > 0");
  if (!(lambda > 0.0)) throw DomainError("onersb_effective_params: need lambda > 0");
  double rho = state.rho();
  double r_chi = rt.value(-state.chi / lambda);
  if (!(r_chi > 0.0))
    throw NumericError("onersb_effective_params: R(-chi/lambda) not positive");
  double r_rho = rt.value(-rho / lambda);
  double rp_rho = rt.derivative(-rho / lambda);
  double inv_r2 = 1.0 / (r_chi * r_chi);
  OneRsbEffective eff{};
  eff.lambda_s = lambda / r_chi;
  eff.lambda1_s = inv_r2 * (r_chi - r_rho) * lambda / state.mu;
  // d/drho { [lambda0 rho - lambda q + lambda p] R(-rho/lambda) }, q and p fixed
  double brace = lambda0 * r_rho -
                 (lambda0 * rho - lambda * state.q + lambda * state.p) * rp_rho / lambda;
  eff.lambda0_s = inv_r2 * brace;
  return eff;
}

double tilt_log_factor(double x, double z0, double z1, double lambda0_s,
                       double lambda1_s, double lambda_s, double mu,
                       const Utility& utility) {
  if (!(lambda_s > 0.0)) throw DomainError("tilt_log_factor: need lambda_s > 0");
  if (!(mu >= 0.0)) throw DomainError("tilt_log_factor: need mu >= 0");
  double y = x + std::sqrt(std::max(0.0, lambda0_s)) * z0 +
             std::sqrt(std::max(0.0, lambda1_s)) * z1;
  double g = scalar_map(y, lambda_s, utility);
  double dg = y - g, dx = y - x;
  return -mu * (0.5 * (dg * dg - dx * dx) / lambda_s + utility.value(g));
}

TiltedGrid build_tilted_grid(const OneRsbEffective& coeffs, double mu,
                             const Prior& prior, const Utility& utility,
                             int quad_order) {
  TiltedGrid grid;
  grid.xnodes = prior.integration_nodes(quad_order);
  grid.z0 = gauss_hermite(quad_order);
  grid.z1 = gauss_hermite(quad_order);
  grid.lambda0_s = std::max(0.0, coeffs.lambda0_s);
  grid.lambda1_s = std::max(0.0, coeffs.lambda1_s);
  grid.lambda_s = coeffs.lambda_s;
  grid.mu = mu;

  const std::size_t nx = grid.nx(), n0 = grid.n0(), n1 = grid.n1();
  grid.weights.resize(nx * n0 * n1);
  grid.log_lambda.resize(nx * n0 * n1);
  grid.g.resize(nx * n0 * n1);

  double sig0 = std::sqrt(grid.lambda0_s), sig1 = std::sqrt(grid.lambda1_s);
  std::vector<double> row(n1);
  for (std::size_t i = 0; i < nx; ++i) {
    double x = grid.xnodes[i].x;
    for (std::size_t j = 0; j < n0; ++j) {
      double base = x + sig0 * grid.z0.nodes[j];
      for (std::size_t k = 0; k < n1; ++k) {
        double y = base + sig1 * grid.z1.nodes[k];
        double g = scalar_map(y, grid.lambda_s, utility);
        double dg = y - g, dx = y - x;
        double lt = -mu * (0.5 * (dg * dg - dx * dx) / grid.lambda_s + utility.value(g));
        grid.g[grid.cell(i, j, k)] = g;
        row[k] = lt + std::log(grid.z1.weights[k]);
      }
      double lz = log_sum_exp(row);
      if (!std::isfinite(lz))
        throw NumericError("build_tilted_grid: tilted row vanished at x=" +
                           std::to_string(x) + " z0=" + std::to_string(grid.z0.nodes[j]));
      for (std::size_t k = 0; k < n1; ++k) {
        std::size_t c = grid.cell(i, j, k);
        grid.weights[c] = std::exp(row[k] - lz);
        grid.log_lambda[c] = row[k] - std::log(grid.z1.weights[k]) - lz;
      }
    }
  }
  return grid;
}

double TiltedGrid::e_log_lambda() const {
  double acc = 0.0;
  for (std::size_t i = 0; i < nx(); ++i)
    for (std::size_t j = 0; j < n0(); ++j) {
      double rw = row_weight(i, j);
      for (std::size_t k = 0; k < n1(); ++k) {
        std::size_t c = cell(i, j, k);
        if (weights[c] > 0.0) acc += rw * weights[c] * log_lambda[c];
      }
    }
  return acc;
}

double eq37_rhs_direct(const TiltedGrid& grid) {
  const std::size_t nx = grid.nx(), n0 = grid.n0(), n1 = grid.n1();
  // marginal law of z1 under the joint tilted measure
  std::vector<double> pz1(n1, 0.0);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < n0; ++j) {
      double rw = grid.row_weight(i, j);
      for (std::size_t k = 0; k < n1; ++k) pz1[k] += rw * grid.weights[grid.cell(i, j, k)];
    }
  double mutual = 0.0;
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < n0; ++j) {
      double rw = grid.row_weight(i, j);
      for (std::size_t k = 0; k < n1; ++k) {
        double w = grid.weights[grid.cell(i, j, k)];
        if (w > 0.0 && pz1[k] > 0.0) mutual += rw * w * std::log(w / pz1[k]);
      }
    }
  double dkl = 0.0;
  for (std::size_t k = 0; k < n1; ++k)
    if (pz1[k] > 0.0) dkl += pz1[k] * std::log(pz1[k] / grid.z1.weights[k]);
  return mutual + dkl;
}

std::string to_string(OneRsbStatus s) {
  switch (s) {
    case OneRsbStatus::kRsb: return "rsb";
    case OneRsbStatus::kCollapsedToRs: return "collapsed to RS";
    case OneRsbStatus::kNoRsbRoot: return "no 1RSB root - RS returned";
  }
  return "?";
}

double OneRsbDefects::max() const {
  return std::max(std::max(q, eq36a), std::max(eq36b, eq37));
}

namespace {

struct GridSums {
  double q_raw;   // E (g-x)^2
  double s0;      // (lambda_s/sqrt(l0s)) E (g-x) z0
  double s1;      // (lambda_s/sqrt(l1s)) E (g-x) z1, NaN when bypassed
  double e_log_lambda;
  double identity_gap;
};

GridSums grid_sums(const TiltedGrid& grid, double lambda0_s_used) {
  double eq = 0.0, ez0 = 0.0, ez1 = 0.0, elog = 0.0;
  for (std::size_t i = 0; i < grid.nx(); ++i) {
    double x = grid.xnodes[i].x;
    for (std::size_t j = 0; j < grid.n0(); ++j) {
      double rw = grid.row_weight(i, j);
      double z0 = grid.z0.nodes[j];
      for (std::size_t k = 0; k < grid.n1(); ++k) {
        std::size_t c = grid.cell(i, j, k);
        double w = rw * grid.weights[c];
        double d = grid.g[c] - x;
        eq += w * d * d;
        ez0 += w * d * z0;
        ez1 += w * d * grid.z1.nodes[k];
        if (grid.weights[c] > 0.0) elog += w * grid.log_lambda[c];
      }
    }
  }
  GridSums s{};
  s.q_raw = eq;
  s.s0 = grid.lambda_s / std::sqrt(lambda0_s_used) * ez0;
  s.s1 = grid.lambda1_s > 0.0
             ? grid.lambda_s / std::sqrt(grid.lambda1_s) * ez1
             : std::numeric_limits<double>::quiet_NaN();
  s.e_log_lambda = elog;
  s.identity_gap = std::abs(eq37_rhs_direct(grid) - elog);
  return s;
}

double eq37_lhs(const OneRsbState& st, const OneRsbEffective& eff, double lambda,
                const RTransform& rt) {
  double ratio = eff.lambda1_s / eff.lambda_s;
  double bracket = st.mu * ratio * st.q - st.mu * ratio * st.p + st.p;
  return st.mu / (2.0 * eff.lambda_s) * bracket -
         rt.integral(st.chi, st.rho(), lambda) / (2.0 * lambda);
}

struct InnerResult {
  OneRsbState state{};
  OneRsbEffective eff{};
  OneRsbDefects defects{};
  double mu_defect = std::numeric_limits<double>::quiet_NaN();  // signed
  double identity_gap = 0.0;
  int iterations = 0;
  bool converged = false;
  bool collapsed = false;
};

// Damped fixed point on (chi, p, q) at fixed mu. Collapse (lambda1_s or p
// driven to zero) is reported, not thrown.
InnerResult inner_solve(double mu, const Prior& prior, const Utility& utility,
                        double lambda, double lambda0, const RTransform& rt,
                        const OneRsbOptions& opts, OneRsbState init) {
  InnerResult res;
  double chi = std::max(0.0, init.chi), p = std::max(0.0, init.p),
         q = std::max(0.0, init.q);
  double damping = opts.damping;
  double prev_defect = std::numeric_limits<double>::infinity();
  const double p_floor = 1e-10 * std::max(1.0, prior.second_moment());
  const double q_cap = 1e8 * std::max(1.0, prior.second_moment());

  int it = 0;
  for (; it < opts.inner_max_iter; ++it) {
    OneRsbState st{chi, p, q, mu};
    OneRsbEffective eff = onersb_effective_params(st, lambda, lambda0, rt);
    if (eff.lambda1_s < kLambda1Floor || p < p_floor) {
      res.collapsed = true;
      res.state = st;
      res.iterations = it;
      return res;
    }
    double l0s_used = std::max(eff.lambda0_s, kLambda0Floor);

    OneRsbEffective used = eff;
    used.lambda0_s = l0s_used;
    TiltedGrid grid = build_tilted_grid(used, mu, prior, utility, opts.quad_order);
    GridSums sums = grid_sums(grid, l0s_used);
    res.identity_gap = std::max(res.identity_gap, sums.identity_gap);

    double q_next = sums.q_raw;
    double chi_next = std::max(0.0, sums.s1 - mu * q_next);
    double p_next = std::max(0.0, (sums.s0 - chi_next) / mu);
    if (!std::isfinite(q_next) || !std::isfinite(chi_next) || !std::isfinite(p_next) ||
        q_next > q_cap)
      throw NumericError("onersb_solve: bad inner update at mu=" + std::to_string(mu) +
                         " chi=" + std::to_string(chi) + " p=" + std::to_string(p) +
                         " q=" + std::to_string(q));

    double defect = std::max({std::abs(q_next - q), std::abs(chi_next - chi),
                              std::abs(p_next - p)});
    if (defect <= opts.inner_tol) {
      res.state = st;
      res.eff = used;
      res.defects.q = std::abs(q - sums.q_raw);
      res.defects.eq36a = std::abs(chi + mu * p - sums.s0);
      res.defects.eq36b = std::abs(chi + mu * q - sums.s1);
      double lhs = eq37_lhs(st, used, lambda, rt);
      res.mu_defect = lhs - sums.e_log_lambda;
      res.defects.eq37 = std::abs(res.mu_defect);
      res.iterations = it + 1;
      res.converged = true;
      return res;
    }
    if (defect > prev_defect) damping = std::max(0.05, 0.5 * damping);
    prev_defect = defect;
    chi = (1.0 - damping) * chi + damping * chi_next;
    p = (1.0 - damping) * p + damping * p_next;
    q = (1.0 - damping) * q + damping * q_next;
  }
  res.state = {chi, p, q, mu};
  res.iterations = it;
  return res;  // converged stays false
}

// Evaluate the symmetric solution on the 1RSB machinery (uniform tilt,
// lambda1_s = 0) so the embedded fallback reports honest defects.
OneRsbDefects embedded_defects(const RsSolution& rs, double mu_probe, const Prior& prior,
                               const Utility& utility, int quad_order,
                               double* identity_gap) {
  OneRsbEffective eff{std::max(rs.lambda0_s, kLambda0Floor), 0.0, rs.lambda_s};
  TiltedGrid grid = build_tilted_grid(eff, mu_probe, prior, utility, quad_order);
  GridSums sums = grid_sums(grid, eff.lambda0_s);
  if (identity_gap) *identity_gap = sums.identity_gap;
  OneRsbDefects d{};
  d.q = std::abs(rs.state.q - sums.q_raw);
  d.eq36a = std::abs(rs.state.chi - sums.s0);  // p = 0
  d.eq36b = 0.0;                               // bypassed: lambda1_s = 0
  // both sides of the mu equation vanish at p = 0, Lambda == 1
  d.eq37 = std::abs(0.0 - sums.e_log_lambda);
  return d;
}

OneRsbSolution fallback_solution(OneRsbStatus status, const Prior& prior,
                                 const Utility& utility, double lambda, double lambda0,
                                 const RTransform& rt, const OneRsbOptions& opts) {
  RsOptions ropts;
  ropts.quad_order = opts.quad_order;
  ropts.tol = std::min(opts.tol, 1e-9);
  ropts.quad_doubling_check = false;
  RsSolution rs = rs_solve(prior, utility, lambda, lambda0, rt, ropts);

  OneRsbSolution sol;
  sol.status = status;
  sol.rs_fallback = rs;
  sol.state = {rs.state.chi, 0.0, rs.state.q, 0.0};
  sol.lambda0_s = rs.lambda0_s;
  sol.lambda1_s = 0.0;
  sol.lambda_s = rs.lambda_s;
  double gap = 0.0;
  sol.defects = embedded_defects(rs, 1.0, prior, utility, opts.quad_order, &gap);
  sol.max_eq37_identity_gap = gap;
  sol.converged = rs.converged;
  return sol;
}

}  // namespace

OneRsbSolution onersb_solve(const Prior& prior, const Utility& utility, double lambda,
                            double lambda0, const RTransform& rt,
                            const OneRsbOptions& opts) {
  if (!(lambda > 0.0)) throw ConfigError("onersb_solve: lambda must be positive");
  if (!(lambda0 >= 0.0)) throw ConfigError("onersb_solve: lambda0 must be nonnegative");
  if (!(opts.mu_min > 0.0 && opts.mu_max > opts.mu_min))
    throw ConfigError("onersb_solve: invalid mu bracket");

  double m2 = prior.second_moment();
  OneRsbState init{std::isnan(opts.init_chi) ? lambda : opts.init_chi,
                   std::isnan(opts.init_p) ? 0.5 * m2 : opts.init_p,
                   std::isnan(opts.init_q) ? m2 : opts.init_q, 0.0};

  int total_inner = 0, outer = 0;
  double max_gap = 0.0;

  // continuation scan over mu for a sign change of the stationarity defect
  std::vector<double> mus(static_cast<std::size_t>(opts.mu_grid));
  double lg0 = std::log(opts.mu_min), lg1 = std::log(opts.mu_max);
  for (int i = 0; i < opts.mu_grid; ++i)
    mus[static_cast<std::size_t>(i)] =
        std::exp(lg0 + (lg1 - lg0) * i / std::max(1, opts.mu_grid - 1));

  struct ScanPoint {
    double mu;
    InnerResult res;
  };
  std::vector<ScanPoint> usable;
  bool any_noncollapsed = false;
  OneRsbState warm = init;
  for (double mu : mus) {
    warm.mu = mu;
    InnerResult r = inner_solve(mu, prior, utility, lambda, lambda0, rt, opts, warm);
    ++outer;
    total_inner += r.iterations;
    max_gap = std::max(max_gap, r.identity_gap);
    if (r.collapsed) continue;
    any_noncollapsed = true;
    if (!r.converged) continue;
    warm = r.state;  // continuation along the branch
    usable.push_back({mu, r});
  }

  std::size_t bracket = usable.size();
  for (std::size_t i = 0; i + 1 < usable.size(); ++i) {
    if (usable[i].res.mu_defect * usable[i + 1].res.mu_defect < 0.0) {
      bracket = i;
      break;
    }
  }
  if (bracket == usable.size()) {
    OneRsbSolution sol = fallback_solution(
        any_noncollapsed ? OneRsbStatus::kNoRsbRoot : OneRsbStatus::kCollapsedToRs, prior,
        utility, lambda, lambda0, rt, opts);
    sol.inner_iterations = total_inner;
    sol.outer_evaluations = outer;
    sol.max_eq37_identity_gap = std::max(sol.max_eq37_identity_gap, max_gap);
    return sol;
  }

  // bisect the bracketed root, warm-starting from the nearer endpoint
  ScanPoint lo = usable[bracket], hi = usable[bracket + 1];
  InnerResult final_res = std::abs(lo.res.mu_defect) < std::abs(hi.res.mu_defect)
                              ? lo.res
                              : hi.res;
  for (int it = 0; it < 80; ++it) {
    if (std::abs(final_res.mu_defect) <= opts.mu_tol) break;
    if (hi.mu - lo.mu <= 1e-13 * hi.mu) break;
    double mid = 0.5 * (lo.mu + hi.mu);
    OneRsbState start = (mid - lo.mu < hi.mu - lo.mu ? lo.res.state : hi.res.state);
    start.mu = mid;
    InnerResult r = inner_solve(mid, prior, utility, lambda, lambda0, rt, opts, start);
    ++outer;
    total_inner += r.iterations;
    max_gap = std::max(max_gap, r.identity_gap);
    if (r.collapsed || !r.converged) {
      // branch lost inside the bracket; tighten toward the better endpoint
      OneRsbSolution sol = fallback_solution(OneRsbStatus::kNoRsbRoot, prior, utility,
                                             lambda, lambda0, rt, opts);
      sol.inner_iterations = total_inner;
      sol.outer_evaluations = outer;
      sol.max_eq37_identity_gap = std::max(sol.max_eq37_identity_gap, max_gap);
      return sol;
    }
    if (std::abs(r.mu_defect) < std::abs(final_res.mu_defect)) final_res = r;
    if (r.mu_defect * lo.res.mu_defect > 0.0)
      lo = {mid, r};
    else
      hi = {mid, r};
  }

  OneRsbSolution sol;
  sol.status = OneRsbStatus::kRsb;
  sol.state = final_res.state;
  sol.lambda0_s = final_res.eff.lambda0_s;
  sol.lambda1_s = final_res.eff.lambda1_s;
  sol.lambda_s = final_res.eff.lambda_s;
  sol.defects = final_res.defects;
  sol.converged = final_res.converged && final_res.defects.max() <= opts.tol;
  sol.inner_iterations = total_inner;
  sol.outer_evaluations = outer;
  sol.max_eq37_identity_gap = max_gap;

  if (opts.quad_doubling_check) {
    int order2 = std::min(2 * opts.quad_order, 200);
    OneRsbEffective used = final_res.eff;
    used.lambda0_s = std::max(used.lambda0_s, kLambda0Floor);
    TiltedGrid g2 = build_tilted_grid(used, sol.state.mu, prior, utility, order2);
    GridSums s2 = grid_sums(g2, used.lambda0_s);
    OneRsbDefects d2{};
    d2.q = std::abs(sol.state.q - s2.q_raw);
    d2.eq36a = std::abs(sol.state.chi + sol.state.mu * sol.state.p - s2.s0);
    d2.eq36b = std::abs(sol.state.chi + sol.state.mu * sol.state.q - s2.s1);
    d2.eq37 = std::abs(eq37_lhs(sol.state, used, lambda, rt) - s2.e_log_lambda);
    sol.quad_doubling_delta = d2.max();
  }
  return sol;
}

double onersb_joint_moment(const OneRsbSolution& sol, const Prior& prior,
                           const Utility& utility, int k, int l, int quad_order) {
  if (k < 0 || l < 0) throw DomainError("onersb_joint_moment: need k, l >= 0");
  OneRsbEffective eff{sol.lambda0_s, sol.lambda1_s, sol.lambda_s};
  double mu = sol.lambda1_s > 0.0 ? sol.state.mu : 0.0;
  TiltedGrid grid = build_tilted_grid(eff, mu, prior, utility, quad_order);
  double acc = 0.0;
  for (std::size_t i = 0; i < grid.nx(); ++i) {
    double xl = std::pow(grid.xnodes[i].x, l);
    for (std::size_t j = 0; j < grid.n0(); ++j) {
      double rw = grid.row_weight(i, j);
      for (std::size_t kk = 0; kk < grid.n1(); ++kk) {
        std::size_t c = grid.cell(i, j, kk);
        acc += rw * grid.weights[c] * std::pow(grid.g[c], k) * xl;
      }
    }
  }
  return acc;
}

DecoupledChannel onersb_predicted_channel(const OneRsbSolution& sol, const Prior& prior,
                                          const Utility& utility) {
  if (sol.lambda1_s > 0.0)
    return DecoupledChannel::one_rsb(prior, utility, sol.lambda0_s, sol.lambda1_s,
                                     sol.lambda_s, sol.state.mu);
  return DecoupledChannel::rs(prior, utility, sol.lambda0_s, sol.lambda_s);
}

}  // namespace replica
