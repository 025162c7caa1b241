#include <doctest.h>

#include <cmath>

#include "replica/errors.hpp"
#include "replica/onersb.hpp"
#include "replica/rng.hpp"

using namespace replica;

namespace {

RTransform mp_rt(double r) { return RTransform(SpectralLaw::marchenko_pastur(r)); }

Prior binary_prior() { return Prior::discrete({{-1.0, 0.5}, {1.0, 0.5}}); }
Utility binary_support() { return Utility::discrete_support({{-1.0, 0.0}, {1.0, 0.0}}); }

OneRsbOptions binary_opts() {
  OneRsbOptions opts;
  opts.mu_min = 0.01;
  opts.mu_max = 2.0;
  opts.mu_grid = 16;
  opts.init_chi = 0.5;
  opts.init_p = 0.5;
  opts.init_q = 0.5;
  opts.quad_doubling_check = false;
  return opts;
}

}  // namespace

TEST_CASE("effective parameters of the broken ansatz") {
  RTransform rt = mp_rt(2.0);
  SUBCASE("p = 0 collapses the second tap and reproduces the symmetric values") {
    OneRsbState st{0.4, 0.0, 0.9, 1.3};
    OneRsbEffective eff = onersb_effective_params(st, 0.8, 0.6, rt);
    CHECK(eff.lambda1_s == 0.0);
    RsEffective rs = rs_effective_params(0.4, 0.9, 0.8, 0.6, rt);
    CHECK(eff.lambda0_s == doctest::Approx(rs.lambda0_s).epsilon(1e-14));
    CHECK(eff.lambda_s == doctest::Approx(rs.lambda_s).epsilon(1e-14));
  }
  SUBCASE("hand evaluation at chi = 0, p = mu = lambda = 1") {
    OneRsbState st{0.0, 1.0, 0.5, 1.0};
    OneRsbEffective eff = onersb_effective_params(st, 1.0, 1.0, rt);
    // R(0) = 1, R(-1) = 1/3: lambda1_s = [1 - 1/3] * 1 = 2/3
    CHECK(eff.lambda1_s == doctest::Approx(2.0 / 3.0).epsilon(1e-13));
    CHECK(eff.lambda_s == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("closed-form law agrees with a sampled empirical law") {
    Rng rng = make_rng(31, 0);
    SpectralLaw mp = SpectralLaw::marchenko_pastur(2.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> eig(6000);
    for (auto& e : eig) e = unif(rng) < 0.5 ? 0.0 : mp.sample_positive(rng);
    RTransform emp(SpectralLaw::empirical(std::move(eig)));
    OneRsbState st{0.0, 1.0, 0.5, 1.0};
    OneRsbEffective a = onersb_effective_params(st, 1.0, 1.0, rt);
    OneRsbEffective b = onersb_effective_params(st, 1.0, 1.0, emp);
    CHECK(std::abs(a.lambda1_s - b.lambda1_s) < 0.05);
  }
}

TEST_CASE("tilting factor") {
  Utility zero = Utility::zero();
  SUBCASE("identity estimator flips the sign of the quadratic cost") {
    double l0s = 0.3, l1s = 0.2, ls = 0.7, mu = 1.4;
    for (double z1 : {-1.0, 0.5}) {
      double x = 0.8, z0 = -0.3;
      double y = x + std::sqrt(l0s) * z0 + std::sqrt(l1s) * z1;
      double expected = mu * (y - x) * (y - x) / (2.0 * ls);
      CHECK(tilt_log_factor(x, z0, z1, l0s, l1s, ls, mu, zero) ==
            doctest::Approx(expected).epsilon(1e-12));
    }
  }
  SUBCASE("mu -> 0 removes the tilt") {
    CHECK(tilt_log_factor(0.5, 0.1, -0.7, 0.3, 0.2, 0.7, 0.0, Utility::l1(1.0)) == 0.0);
  }
  SUBCASE("soft threshold below the kink") {
    // g = 0 whenever |y| <= alpha lambda_s
    Utility lasso = Utility::l1(1.0);
    double ls = 1.0, mu = 0.8, l0s = 0.01, l1s = 0.01;
    double x = 0.2, z0 = 1.0, z1 = -1.0;
    double y = x + std::sqrt(l0s) * z0 + std::sqrt(l1s) * z1;
    REQUIRE(std::abs(y) < ls);
    double expected = -mu * ((y * y - (y - x) * (y - x)) / (2.0 * ls));
    CHECK(tilt_log_factor(x, z0, z1, l0s, l1s, ls, mu, lasso) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("tilted grid construction") {
  Prior prior = binary_prior();
  SUBCASE("mu = 0 and lambda1_s = 0 give the raw quadrature weights") {
    OneRsbEffective flat{0.2, 0.3, 1.0};
    TiltedGrid g0 = build_tilted_grid(flat, 0.0, prior, binary_support(), 21);
    OneRsbEffective notap{0.2, 0.0, 1.0};
    TiltedGrid g1 = build_tilted_grid(notap, 1.7, prior, binary_support(), 21);
    for (const TiltedGrid* g : {&g0, &g1})
      for (std::size_t i = 0; i < g->nx(); ++i)
        for (std::size_t j = 0; j < g->n0(); ++j)
          for (std::size_t k = 0; k < g->n1(); ++k)
            CHECK(g->weights[g->cell(i, j, k)] ==
                  doctest::Approx(g->z1.weights[k]).epsilon(1e-12));
  }
  SUBCASE("rows are normalized") {
    OneRsbEffective eff{0.005, 0.08, 0.01};
    TiltedGrid g = build_tilted_grid(eff, 0.11, prior, binary_support(), 61);
    for (std::size_t i = 0; i < g.nx(); ++i)
      for (std::size_t j = 0; j < g.n0(); ++j) {
        double row = 0.0;
        for (std::size_t k = 0; k < g.n1(); ++k) row += g.weights[g.cell(i, j, k)];
        CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
      }
  }
  SUBCASE("identity-estimator tilt matches the gaussian closed form") {
    // tilt weight prop. to pi(z1) exp(c (a z0 + b z1)^2 / 2) is gaussian in z1
    Utility zero = Utility::zero();
    double l0s = 0.36, l1s = 0.09, ls = 1.0, mu = 2.0;  // c b^2 = 0.18
    OneRsbEffective eff{l0s, l1s, ls};
    TiltedGrid g = build_tilted_grid(eff, mu, Prior::gaussian(0.0, 1.0), zero, 61);
    double c = mu / ls, a = std::sqrt(l0s), b = std::sqrt(l1s);
    double tau = 1.0 - c * b * b;
    for (std::size_t i : {std::size_t{10}, std::size_t{30}})
      for (std::size_t j : {std::size_t{15}, std::size_t{45}}) {
        double z0 = g.z0.nodes[j];
        double mean_target = c * a * b * z0 / tau;
        double var_target = 1.0 / tau;
        double m1 = 0.0, m2 = 0.0;
        for (std::size_t k = 0; k < g.n1(); ++k) {
          m1 += g.weights[g.cell(i, j, k)] * g.z1.nodes[k];
          m2 += g.weights[g.cell(i, j, k)] * g.z1.nodes[k] * g.z1.nodes[k];
        }
        CHECK(m1 == doctest::Approx(mean_target).epsilon(1e-6));
        CHECK(m2 - m1 * m1 == doctest::Approx(var_target).epsilon(1e-6));
      }
  }
}

TEST_CASE("information identity of the mu equation") {
  Prior prior = binary_prior();
  SUBCASE("uniform tilt gives zero") {
    OneRsbEffective notap{0.2, 0.0, 1.0};
    TiltedGrid g = build_tilted_grid(notap, 1.0, prior, binary_support(), 41);
    CHECK(eq37_rhs_direct(g) == doctest::Approx(0.0).epsilon(1e-13));
    CHECK(g.e_log_lambda() == doctest::Approx(0.0).epsilon(1e-13));
  }
  SUBCASE("direct evaluation equals the log expectation and is nonnegative") {
    OneRsbEffective eff{0.005, 0.08, 0.01};
    TiltedGrid g = build_tilted_grid(eff, 0.11, prior, binary_support(), 61);
    double direct = eq37_rhs_direct(g);
    CHECK(direct >= 0.0);
    CHECK(std::abs(direct - g.e_log_lambda()) < 1e-6);
    CHECK(std::abs(direct - g.e_log_lambda()) < 1e-10);  // exact identity on a grid
  }
}

TEST_CASE("matched convex problem collapses to the symmetric solution") {
  Prior prior = Prior::gaussian(0.0, 1.0);
  Utility ridge = Utility::quadratic(1.0);
  RTransform rt = mp_rt(2.0);
  OneRsbOptions opts;
  opts.quad_doubling_check = false;
  OneRsbSolution sol = onersb_solve(prior, ridge, 1.0, 1.0, rt, opts);
  CHECK(sol.status != OneRsbStatus::kRsb);
  CHECK(sol.lambda1_s <= 1e-10);
  CHECK(sol.converged);
  CHECK(sol.state.p == 0.0);

  RsSolution rs = rs_solve(prior, ridge, 1.0, 1.0, rt);
  CHECK(std::abs(sol.state.chi - rs.state.chi) < 1e-8);
  CHECK(std::abs(sol.state.q - rs.state.q) < 1e-8);
  CHECK(std::abs(sol.lambda0_s - rs.lambda0_s) < 1e-8);
  CHECK(std::abs(sol.lambda_s - rs.lambda_s) < 1e-8);
  for (int total = 0; total <= 4; ++total)
    for (int k = 0; k <= total; ++k)
      CHECK(std::abs(onersb_joint_moment(sol, prior, ridge, k, total - k) -
                     rs_joint_moment(rs, prior, ridge, k, total - k)) < 1e-6);
  CHECK(sol.max_eq37_identity_gap <= 1e-6);
}

TEST_CASE("broken solution for the binary sign estimator at low noise") {
  // regression anchor recorded from the first verified run of this solver;
  // independently validated by a prototype of the same equations
  Prior prior = binary_prior();
  Utility u = binary_support();
  RTransform rt = mp_rt(2.0);
  OneRsbSolution sol = onersb_solve(prior, u, 0.01, 0.01, rt, binary_opts());
  REQUIRE(sol.status == OneRsbStatus::kRsb);
  REQUIRE(sol.converged);
  CHECK(sol.defects.q <= 1e-7);
  CHECK(sol.defects.eq36a <= 1e-7);
  CHECK(sol.defects.eq36b <= 1e-7);
  CHECK(sol.defects.eq37 <= 1e-7);
  CHECK(sol.max_eq37_identity_gap <= 1e-6);
  CHECK(sol.lambda1_s > 0.01);

  CHECK(sol.state.mu == doctest::Approx(0.10716055).epsilon(2e-3));
  CHECK(sol.state.p == doctest::Approx(0.48710039).epsilon(2e-3));
  CHECK(sol.state.q == doctest::Approx(0.85245753).epsilon(2e-3));
  CHECK(sol.lambda0_s == doctest::Approx(0.00579286).epsilon(5e-3));
  CHECK(sol.lambda1_s == doctest::Approx(0.08615284).epsilon(5e-3));
  CHECK(sol.lambda_s == doctest::Approx(0.01012783).epsilon(5e-3));

  // lambda1_s >= 0 requires R(-chi/lambda) >= R(-rho/lambda)
  CHECK(rt.value(-sol.state.chi / 0.01) >= rt.value(-sol.state.rho() / 0.01));
}

TEST_CASE("joint moments under the tilted channel") {
  Prior prior = binary_prior();
  Utility u = binary_support();
  RTransform rt = mp_rt(2.0);
  OneRsbSolution sol = onersb_solve(prior, u, 0.01, 0.01, rt, binary_opts());
  REQUIRE(sol.status == OneRsbStatus::kRsb);

  CHECK(onersb_joint_moment(sol, prior, u, 0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(onersb_joint_moment(sol, prior, u, 0, 2) == doctest::Approx(1.0).epsilon(1e-12));
  double expanded = onersb_joint_moment(sol, prior, u, 2, 0) -
                    2.0 * onersb_joint_moment(sol, prior, u, 1, 1) +
                    onersb_joint_moment(sol, prior, u, 0, 2);
  CHECK(expanded == doctest::Approx(sol.state.q).epsilon(1e-9));
}

TEST_CASE("two-tap predicted channel") {
  Prior prior = binary_prior();
  Utility u = binary_support();
  RTransform rt = mp_rt(2.0);
  OneRsbSolution sol = onersb_solve(prior, u, 0.01, 0.01, rt, binary_opts());
  REQUIRE(sol.status == OneRsbStatus::kRsb);
  DecoupledChannel ch = onersb_predicted_channel(sol, prior, u);
  REQUIRE(ch.two_tap());

  SUBCASE("sampled moments match the grid quadrature") {
    Rng rng = make_rng(41, 0);
    const int n = 200000;
    double m11 = 0.0, m11_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      auto [x, xh] = ch.sample(rng);
      m11 += xh * x;
      m11_sq += xh * x * xh * x;
    }
    m11 /= n;
    m11_sq /= n;
    double se = std::sqrt((m11_sq - m11 * m11) / n);
    CHECK(std::abs(m11 - ch.moment(1, 1)) < 3.0 * se + 1e-3);
  }

  SUBCASE("conditional cdf is a step between the support atoms") {
    ConditionalLaw law = ch.conditional(1.0);
    double below = law.cdf(-1.0);
    double mid = law.cdf(0.0);
    CHECK(below == doctest::Approx(mid).epsilon(1e-9));  // no mass strictly inside
    CHECK(law.cdf(1.0) == doctest::Approx(1.0).epsilon(1e-12));
    // by symmetry P(xhat = -1 | x = 1) is the disagreement mass (1 - M11)/2
    double m11 = ch.moment(1, 1);
    CHECK(below == doctest::Approx((1.0 - m11) / 2.0).epsilon(5e-3));
  }

  SUBCASE("collapsed solutions hand back the single-tap channel") {
    OneRsbOptions opts;
    opts.quad_doubling_check = false;
    OneRsbSolution flat = onersb_solve(Prior::gaussian(0.0, 1.0), Utility::quadratic(1.0),
                                       1.0, 1.0, mp_rt(2.0), opts);
    DecoupledChannel rs_ch = onersb_predicted_channel(flat, Prior::gaussian(0.0, 1.0),
                                                      Utility::quadratic(1.0));
    CHECK_FALSE(rs_ch.two_tap());
  }
}

TEST_CASE("option validation") {
  OneRsbOptions opts;
  opts.mu_min = -1.0;
  CHECK_THROWS_AS(onersb_solve(binary_prior(), binary_support(), 1.0, 1.0, mp_rt(2.0), opts),
                  ConfigError);
}
