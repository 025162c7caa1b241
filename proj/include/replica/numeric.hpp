#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace replica {

inline constexpr double kPi = 3.14159265358979323846;

/// Standard normal pdf.
inline double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * kPi);
}

/// Standard normal cdf.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// log(sum_i exp(a_i)), stable.
double log_sum_exp(std::span<const double> a);

/// Find a root of f on [lo, hi] (f(lo), f(hi) of opposite sign) by Brent's
/// method. Converges to ~machine precision in the argument.
double brent_root(const std::function<double(double)>& f, double lo, double hi,
                  double tol = 1e-14, int max_iter = 200);

/// Minimize a univariate function on [lo, hi] by golden-section search.
double golden_section_min(const std::function<double(double)>& f, double lo,
                          double hi, double tol = 1e-10);

/// Survival function Q(t) = P(K > t) of the Kolmogorov distribution.
double kolmogorov_q(double t);

/// Asymptotic one-sample KS p-value for statistic d at sample size n
/// (Stephens' small-sample correction).
double ks_pvalue_one_sample(double d, std::size_t n);

/// Asymptotic two-sample KS p-value for statistic d at sizes n1, n2.
double ks_pvalue_two_sample(double d, std::size_t n1, std::size_t n2);

}  // namespace replica
