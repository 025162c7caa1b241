#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "replica/errors.hpp"
#include "replica/numeric.hpp"
#include "replica/rng.hpp"
#include "replica/spectral.hpp"

using namespace replica;

namespace {

// eigenvalues of A^T A for A (k x n) with i.i.d. N(0, 1/k) entries,
// via the singular values of A (zeros padded when n > k)
std::vector<double> sampled_gram_eigenvalues(int n, int k, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(k)));
  Eigen::MatrixXd a(k, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < k; ++i) a(i, j) = normal(rng);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a);
  std::vector<double> eig(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < svd.singularValues().size(); ++i)
    eig[static_cast<std::size_t>(i)] = svd.singularValues()(i) * svd.singularValues()(i);
  return eig;
}

// draws from the MP law itself (atom at zero plus bulk)
SpectralLaw empirical_from_mp(double r, std::size_t count, std::uint64_t seed) {
  SpectralLaw mp = SpectralLaw::marchenko_pastur(r);
  Rng rng = make_rng(seed, 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> eig(count);
  for (auto& e : eig) e = unif(rng) < mp.zero_mass() ? 0.0 : mp.sample_positive(rng);
  return SpectralLaw::empirical(std::move(eig));
}

// independent oracle: invert the law's Stieltjes transform by root-finding
double r_by_inversion(const SpectralLaw& law, double w) {
  double smin = law.support_min();
  auto f = [&](double s) { return stieltjes(law, s) + w; };  // target: G(s) = -w
  double hi = smin - 1e-12;
  while (f(hi) < 0.0) hi = smin - (smin - hi) * 0.25;
  double lo = hi - 1.0;
  while (f(lo) > 0.0) lo -= 2.0 * (hi - lo);
  double s = brent_root(f, lo, hi);
  return s - 1.0 / w;
}

}  // namespace

TEST_CASE("stieltjes closed forms and finite-sample means") {
  SpectralLaw sp = SpectralLaw::scaled_projector(2.0, 2.0);
  CHECK(stieltjes(sp, -1.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));

  SpectralLaw ones = SpectralLaw::empirical({1.0, 1.0, 1.0});
  CHECK(stieltjes(ones, -1.0) == doctest::Approx(0.5).epsilon(1e-14));

  SpectralLaw mp2 = SpectralLaw::marchenko_pastur(2.0);
  // oracle: solve G from the closed-form R by root finding
  RTransform rt(mp2);
  double w = brent_root([&](double ww) { return rt.value(ww) + 1.0 / ww - (-1.0); },
                        -5.0, -1e-6);
  CHECK(stieltjes(mp2, -1.0) == doctest::Approx(-w).epsilon(1e-10));
  CHECK(stieltjes(mp2, -1.0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));

  // cross-check against the mean of (lambda_i + 1)^{-1} for a sampled matrix
  auto eig = sampled_gram_eigenvalues(1024, 512, 7);
  double acc = 0.0;
  for (double e : eig) acc += 1.0 / (e + 1.0);
  acc /= static_cast<double>(eig.size());
  CHECK(stieltjes(mp2, -1.0) == doctest::Approx(acc).epsilon(0.01));

  CHECK_THROWS_AS(stieltjes(mp2, 0.5), DomainError);
  CHECK_THROWS_AS(stieltjes(ones, 1.0), DomainError);
}

TEST_CASE("marchenko-pastur r-transform closed form") {
  RTransform rt(SpectralLaw::marchenko_pastur(2.0));
  CHECK(rt.value(0.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rt.value(-1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(rt.value(0.5), DomainError);
}

TEST_CASE("empirical r-transform by stieltjes inversion") {
  SpectralLaw emp = empirical_from_mp(2.0, 5000, 11);
  RTransform rt(emp);
  CHECK(rt.value(-1.0) == doctest::Approx(1.0 / 3.0).epsilon(0.06));  // +-0.02 absolute
  CHECK(std::abs(rt.value(-1.0) - 1.0 / 3.0) < 0.02);
  CHECK(rt.value(0.0) == doctest::Approx(emp.mean()).epsilon(1e-12));

  // matches the independent inversion oracle to root-finder precision
  for (double w : {-2.0, -0.7, -0.1})
    CHECK(rt.value(w) == doctest::Approx(r_by_inversion(emp, w)).epsilon(1e-10));
}

TEST_CASE("r-transform derivative") {
  RTransform mp(SpectralLaw::marchenko_pastur(2.0));
  CHECK(mp.derivative(0.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(mp.derivative(-1.0) == doctest::Approx(2.0 / 9.0).epsilon(1e-15));

  // empirical derivative vs central finite difference with Richardson
  SpectralLaw emp = empirical_from_mp(2.0, 4000, 13);
  RTransform rt(emp);
  for (double w : {-0.5, -1.0, -2.0}) {
    double h = 1e-4 * std::max(1.0, std::abs(w));
    auto fd = [&](double step) { return (rt.value(w + step) - rt.value(w - step)) / (2.0 * step); };
    double d1 = fd(h), d2 = fd(h / 2.0);
    double richardson = (4.0 * d2 - d1) / 3.0;
    CHECK(rt.derivative(w) == doctest::Approx(richardson).epsilon(1e-6));
  }
  // against the closed form, at sampling accuracy
  CHECK(std::abs(rt.derivative(-1.0) - 2.0 / 9.0) < 1e-2);
}

TEST_CASE("scaled projector r-transform against numeric inversion") {
  SpectralLaw sp = SpectralLaw::scaled_projector(2.0, 2.0);
  RTransform rt(sp);
  CHECK(rt.value(0.0) == doctest::Approx(1.0).epsilon(1e-12));  // mean c/r
  for (double w : {-3.0, -1.0, -0.25, -0.01})
    CHECK(rt.value(w) == doctest::Approx(r_by_inversion(sp, w)).epsilon(1e-10));
  // degenerate r = 1 is a point mass at c
  RTransform point(SpectralLaw::scaled_projector(1.0, 3.0));
  CHECK(point.value(-2.0) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(point.derivative(-2.0) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("r integral") {
  RTransform mp(SpectralLaw::marchenko_pastur(2.0));
  CHECK(mp.integral(0.7, 0.7, 1.0) == 0.0);
  // adaptive-quadrature oracle for int_0^1 (1 + 2w)^{-1} dw
  double expected = 0.5 * std::log(3.0);
  CHECK(mp.integral(0.0, 1.0, 1.0) == doctest::Approx(expected).epsilon(1e-12));
  // composite Simpson as an independent rule
  auto simpson = [&](const RTransform& rt, double a, double b, double lam, int cells) {
    double h = (b - a) / cells, acc = 0.0;
    for (int i = 0; i < cells; ++i) {
      double x0 = a + i * h, x1 = x0 + h;
      acc += h / 6.0 *
             (rt.value(-x0 / lam) + 4.0 * rt.value(-0.5 * (x0 + x1) / lam) + rt.value(-x1 / lam));
    }
    return acc;
  };
  CHECK(mp.integral(0.0, 1.0, 1.0) ==
        doctest::Approx(simpson(mp, 0.0, 1.0, 1.0, 400)).epsilon(1e-10));

  RTransform sp(SpectralLaw::scaled_projector(2.0, 2.0));
  double got = sp.integral(0.0, 0.5, 1.0);
  CHECK(got == doctest::Approx(simpson(sp, 0.0, 0.5, 1.0, 800)).epsilon(1e-9));
  CHECK(std::abs(got - simpson(sp, 0.0, 0.5, 1.0, 1600)) < 1e-8);

  CHECK_THROWS_AS(mp.integral(1.0, 0.5, 1.0), DomainError);
  CHECK_THROWS_AS(mp.integral(0.0, 1.0, -1.0), DomainError);

  // d/db integral(a, b, lambda) = R(-b/lambda)
  for (const RTransform* rt : {&mp, &sp}) {
    double h = 1e-5;
    double deriv = (rt->integral(0.0, 1.0 + h, 2.0) - rt->integral(0.0, 1.0 - h, 2.0)) / (2.0 * h);
    CHECK(deriv == doctest::Approx(rt->value(-0.5)).epsilon(1e-6));
  }
}

TEST_CASE("r-transform value at zero equals the mean eigenvalue") {
  CHECK(RTransform(SpectralLaw::marchenko_pastur(0.5)).value(0.0) == 1.0);
  CHECK(RTransform(SpectralLaw::scaled_projector(4.0, 2.0)).value(0.0) ==
        doctest::Approx(0.5).epsilon(1e-14));
  SpectralLaw emp = SpectralLaw::empirical({0.0, 1.0, 2.0, 5.0});
  CHECK(RTransform(emp).value(0.0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("stieltjes / r-transform round trip") {
  std::vector<SpectralLaw> laws;
  laws.push_back(SpectralLaw::marchenko_pastur(0.5));
  laws.push_back(SpectralLaw::marchenko_pastur(1.0));
  laws.push_back(SpectralLaw::marchenko_pastur(2.0));
  laws.push_back(SpectralLaw::scaled_projector(2.0, 2.0));
  laws.push_back(empirical_from_mp(2.0, 2000, 17));
  for (const auto& law : laws) {
    RTransform rt(law);
    for (double w = -5.0; w < -1e-3; w += 0.2499) {
      double s = rt.value(w) + 1.0 / w;
      REQUIRE(s < law.support_min());
      // with G(s) = E[(t - s)^{-1}] positive below the support, the
      // inversion identity reads G(R(w) + 1/w) = -w
      CHECK(stieltjes(law, s) == doctest::Approx(-w).epsilon(1e-8));
    }
  }
}

TEST_CASE("closed-form and sampled-matrix r-transforms agree") {
  // >= 4096 eigenvalues of an i.i.d. Gaussian matrix, variance 1/k
  auto eig = sampled_gram_eigenvalues(4096, 2048, 23);
  RTransform emp(SpectralLaw::empirical(std::move(eig)));
  RTransform mp(SpectralLaw::marchenko_pastur(2.0));
  for (double w = -2.0; w <= 0.0; w += 0.125)
    CHECK(std::abs(emp.value(w) - mp.value(w)) < 0.02);
}

TEST_CASE("law constructors reject bad input") {
  CHECK_THROWS_AS(SpectralLaw::marchenko_pastur(-1.0), ConfigError);
  CHECK_THROWS_AS(SpectralLaw::scaled_projector(0.5, 1.0), ConfigError);
  CHECK_THROWS_AS(SpectralLaw::scaled_projector(2.0, -1.0), ConfigError);
  CHECK_THROWS_AS(SpectralLaw::empirical({}), ConfigError);
  CHECK_THROWS_AS(SpectralLaw::empirical({1.0, -0.5}), ConfigError);
  CHECK_NOTHROW(SpectralLaw::empirical({1.0, -1e-14}));  // eigensolver dust
}

TEST_CASE("marchenko-pastur cdf and positive-part sampler") {
  SpectralLaw mp = SpectralLaw::marchenko_pastur(2.0);
  CHECK(mp.cdf(-1.0) == 0.0);
  CHECK(mp.cdf(0.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(mp.cdf(10.0) == doctest::Approx(1.0).epsilon(1e-12));
  // mean of the positive part is mean / (1 - zero mass) = 2
  Rng rng = make_rng(29, 0);
  double acc = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) acc += mp.sample_positive(rng);
  CHECK(acc / n == doctest::Approx(2.0).epsilon(0.01));
}
