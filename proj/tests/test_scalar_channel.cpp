#include <doctest.h>

#include <cmath>

#include "replica/errors.hpp"
#include "replica/prior.hpp"
#include "replica/quadrature.hpp"
#include "replica/rng.hpp"
#include "replica/utility.hpp"

using namespace replica;

namespace {

// dense-grid minimization oracle over [y - 10 sqrt(l), y + 10 sqrt(l)]
double grid_argmin(double y, double lambda_s, const Utility& u, double step = 1e-4) {
  double span = 10.0 * std::sqrt(lambda_s);
  double best_v = y - span, best_obj = std::numeric_limits<double>::infinity();
  for (double v = y - span; v <= y + span; v += step) {
    double d = y - v;
    double obj = 0.5 * d * d / lambda_s + u.value(v);
    if (obj < best_obj) {
      best_obj = obj;
      best_v = v;
    }
  }
  return best_v;
}

double double_factorial_odd(int m) {  // (2m - 1)!!
  double acc = 1.0;
  for (int i = 2 * m - 1; i > 1; i -= 2) acc *= i;
  return acc;
}

}  // namespace

TEST_CASE("gauss-hermite basics") {
  Quadrature q1 = gauss_hermite(1);
  REQUIRE(q1.size() == 1);
  CHECK(q1.nodes[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(q1.weights[0] == doctest::Approx(1.0).epsilon(1e-15));

  Quadrature q10 = gauss_hermite(10);
  double m2 = 0.0, w = 0.0;
  for (std::size_t i = 0; i < q10.size(); ++i) {
    m2 += q10.weights[i] * q10.nodes[i] * q10.nodes[i];
    w += q10.weights[i];
  }
  CHECK(w == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(m2 == doctest::Approx(1.0).epsilon(1e-13));

  CHECK_THROWS_AS(gauss_hermite(0), ConfigError);
  CHECK_THROWS_AS(gauss_hermite(201), ConfigError);
}

TEST_CASE("gauss-hermite gaussian moments through z^8") {
  Quadrature q = gauss_hermite(61);
  for (int m = 1; m <= 4; ++m) {
    double acc = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i)
      acc += q.weights[i] * std::pow(q.nodes[i], 2 * m);
    CHECK(acc == doctest::Approx(double_factorial_odd(m)).epsilon(1e-10));
  }
  // exactness degree: z^(2 * order - 2) is still integrated exactly at low order
  Quadrature q4 = gauss_hermite(4);
  double m6 = 0.0;
  for (std::size_t i = 0; i < q4.size(); ++i)
    m6 += q4.weights[i] * std::pow(q4.nodes[i], 6);
  CHECK(m6 == doctest::Approx(15.0).epsilon(1e-12));
}

TEST_CASE("expect_xz normalization and independence") {
  Prior bg = Prior::bernoulli_gaussian(0.1, 1.0);
  Quadrature z = gauss_hermite(41);
  CHECK(expect_xz([](double, double) { return 1.0; }, bg, z) ==
        doctest::Approx(1.0).epsilon(1e-13));
  CHECK(expect_xz([](double, double zz) { return zz * zz; }, bg, z) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(expect_xz([](double x, double zz) { return x * zz; }, bg, z) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(
      expect_xz([](double, double) { return std::numeric_limits<double>::quiet_NaN(); },
                bg, z),
      NumericError);
}

TEST_CASE("scalar map closed forms") {
  CHECK(scalar_map(3.0, 2.0, Utility::quadratic(1.0)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(scalar_map(2.0, 1.0, Utility::l1(1.0)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(scalar_map(0.5, 1.0, Utility::l1(1.0)) == 0.0);
  Utility bpsk = Utility::discrete_support({{-1.0, std::log(2.0)}, {1.0, std::log(2.0)}});
  CHECK(scalar_map(0.4, 1.0, bpsk) == 1.0);
  CHECK(scalar_map(0.0, 1.0, bpsk) == -1.0);  // exact tie breaks to the smaller value
  CHECK_THROWS_AS(scalar_map(1.0, 0.0, Utility::l1(1.0)), DomainError);
  CHECK_THROWS_AS(scalar_map(1.0, -1.0, Utility::l1(1.0)), DomainError);
}

TEST_CASE("scalar map against dense-grid minimization") {
  Rng rng = make_rng(3, 0);
  std::uniform_real_distribution<double> uy(-8.0, 8.0), ul(0.01, 4.0);
  std::vector<Utility> utilities;
  utilities.push_back(Utility::quadratic(0.7));
  utilities.push_back(Utility::l1(1.3));
  utilities.push_back(Utility::elastic_net(0.8, 0.5));
  utilities.push_back(Utility::custom([](double v) { return 1.3 * std::abs(v); }, -90.0, 90.0));
  for (int trial = 0; trial < 1000; ++trial) {
    double y = uy(rng), l = ul(rng);
    const Utility& u = utilities[static_cast<std::size_t>(trial) % utilities.size()];
    double got = scalar_map(y, l, u);
    double oracle = grid_argmin(y, l, u);
    CHECK(std::abs(got - oracle) < 1e-3);
  }
}

TEST_CASE("scalar map properties for convex utilities") {
  Rng rng = make_rng(5, 0);
  std::uniform_real_distribution<double> uy(-10.0, 10.0), ul(0.05, 5.0);
  std::vector<Utility> utilities = {Utility::quadratic(2.0), Utility::l1(0.7),
                                    Utility::elastic_net(0.3, 1.1)};
  for (int trial = 0; trial < 2000; ++trial) {
    const Utility& u = utilities[static_cast<std::size_t>(trial) % utilities.size()];
    double l = ul(rng), y1 = uy(rng), y2 = uy(rng);
    double g1 = scalar_map(y1, l, u), g2 = scalar_map(y2, l, u);
    CHECK(std::abs(g1 - g2) <= std::abs(y1 - y2) + 1e-12);  // nonexpansive
    if (y1 >= y2) CHECK(g1 >= g2 - 1e-12);                  // monotone
  }
  // identity when u == 0
  for (double y : {-3.0, 0.0, 2.5})
    CHECK(scalar_map(y, 0.8, Utility::zero()) == doctest::Approx(y).epsilon(1e-15));
}

TEST_CASE("custom utility needs a bracket") {
  CHECK_THROWS_AS(Utility::custom(nullptr, -1.0, 1.0), ConfigError);
  CHECK_THROWS_AS(Utility::custom([](double) { return 0.0; }, 1.0, -1.0), ConfigError);
}

TEST_CASE("prior construction and moments") {
  Prior bg = Prior::bernoulli_gaussian(0.1, 1.0);
  CHECK(bg.mean() == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(bg.second_moment() == doctest::Approx(0.1).epsilon(1e-14));
  CHECK_FALSE(bg.is_discrete());
  REQUIRE(bg.atoms().size() == 1);
  CHECK(bg.atoms()[0].value == 0.0);

  Prior pm1 = Prior::discrete({{-1.0, 0.5}, {1.0, 0.5}});
  CHECK(pm1.second_moment() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pm1.is_discrete());
  CHECK_THROWS_AS(Prior::discrete({{-1.0, 0.6}, {1.0, 0.6}}), ConfigError);

  Prior lap = Prior::laplace(1.0 / std::sqrt(2.0));
  CHECK(lap.second_moment() == doctest::Approx(1.0).epsilon(1e-6));

  auto nodes = bg.integration_nodes(61);
  double w = 0.0, m2 = 0.0;
  for (const auto& n : nodes) {
    w += n.w;
    m2 += n.w * n.x * n.x;
  }
  CHECK(w == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(m2 == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("prior sampling matches moments and is reproducible") {
  Prior bg = Prior::bernoulli_gaussian(0.1, 1.0);
  Rng r1 = make_rng(9, 0), r2 = make_rng(9, 0);
  for (int i = 0; i < 100; ++i) CHECK(bg.sample(r1) == bg.sample(r2));

  Prior lap = Prior::laplace(0.5);
  Rng rng = make_rng(9, 1);
  double m1 = 0.0, m2 = 0.0;
  const int n = 400000;
  for (int i = 0; i < n; ++i) {
    double x = lap.sample(rng);
    m1 += x;
    m2 += x * x;
  }
  m1 /= n;
  m2 /= n;
  CHECK(std::abs(m1) < 0.005);
  CHECK(m2 == doctest::Approx(2.0 * 0.25).epsilon(0.02));
}
