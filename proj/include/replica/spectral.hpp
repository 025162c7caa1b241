#pragma once

#include <random>
#include <string>
#include <variant>
#include <vector>

namespace replica {

using Rng = std::mt19937_64;

/// Marchenko-Pastur law of J = A^T A for A (k x n) with i.i.d. N(0, 1/k)
/// entries and aspect ratio r = lim n/k. Normalized to mean eigenvalue 1.
struct MarchenkoPastur {
  double r;
};

/// Two-atom law: mass (1 - 1/r) at 0 and 1/r at c. Mean c/r.
struct ScaledProjector {
  double r;
  double c;
};

/// Finite eigenvalue sample; Stieltjes means are exact finite-sample averages.
struct Empirical {
  std::vector<double> eigenvalues;  // sorted ascending, nonnegative
};

/// Asymptotic spectral law of J = A^T A. Immutable after construction.
class SpectralLaw {
 public:
  using Variant = std::variant<MarchenkoPastur, ScaledProjector, Empirical>;

  static SpectralLaw marchenko_pastur(double r);
  static SpectralLaw scaled_projector(double r, double c);
  static SpectralLaw empirical(std::vector<double> eigenvalues);
  /// One eigenvalue per line, '#' comments and blank lines ignored.
  static SpectralLaw empirical_from_file(const std::string& path);

  const Variant& variant() const { return v_; }
  double mean() const;
  double second_moment() const;
  double support_min() const;
  double support_max() const;
  /// Point mass at zero.
  double zero_mass() const;
  /// Distribution function F(x) = P(t <= x).
  double cdf(double x) const;
  /// Sample from the law conditioned on {t > 0}.
  double sample_positive(Rng& rng) const;

 private:
  explicit SpectralLaw(Variant v);
  void build_bulk_table();

  Variant v_;
  // tabulated bulk CDF for MarchenkoPastur (x grid, cumulative mass)
  std::vector<double> blk_x_, blk_f_;
};

/// E[(t - s)^{-1}] under the law, for real s strictly below the support.
/// Real, positive, and increasing on that domain.
double stieltjes(const SpectralLaw& law, double s);

struct RTransformOptions {
  double root_tol = 1e-15;
  double bracket_expansion = 2.0;
};

/// R-transform of a spectral law on the real half-line omega <= 0, with
/// derivative and definite-integral access. R(0) equals the mean eigenvalue.
///
/// Convention: R(w) = G^{-1}(w) - 1/w with G the Cauchy transform
/// E[(s - t)^{-1}]; equivalently, for w < 0, R(w) = s - 1/w where s < min
/// support solves E[(t - s)^{-1}] = -w.
class RTransform {
 public:
  explicit RTransform(SpectralLaw law, RTransformOptions opts = {});

  const SpectralLaw& law() const { return law_; }

  /// R(w), w <= 0.
  double value(double w) const;
  /// dR/dw, w <= 0.
  double derivative(double w) const;
  /// Integral of R(-w/lambda) dw over [a, b], 0 <= a <= b, lambda > 0.
  double integral(double a, double b, double lambda) const;

 private:
  // solves E[(t - s)^{-1}] = -w over s < min eigenvalue (Empirical laws)
  double invert_stieltjes(double w) const;

  SpectralLaw law_;
  RTransformOptions opts_;
};

}  // namespace replica
