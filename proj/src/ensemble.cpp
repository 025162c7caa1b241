#include "replica/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "replica/errors.hpp"

namespace replica {

Eigen::MatrixXd haar_orthogonal(int n, Rng& rng) {
  if (n < 1) throw ConfigError("haar_orthogonal: n must be >= 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd g(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd diag = qr.matrixQR().diagonal();
  for (int j = 0; j < n; ++j)
    if (diag(j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

EnsembleSampler EnsembleSampler::iid_gaussian(int n, int k) {
  if (n < 1 || k < 1) throw ConfigError("EnsembleSampler: need n, k >= 1");
  return EnsembleSampler(n, k);
}

EnsembleSampler EnsembleSampler::haar_spectral(int n, int k, SpectralLaw law,
                                               bool quantile_eigenvalues) {
  if (n < 1 || k < 1) throw ConfigError("EnsembleSampler: need n, k >= 1");
  if (n > k) {
    double needed = 1.0 - static_cast<double>(k) / n;
    if (law.zero_mass() + 1e-9 < needed)
      throw ConfigError("EnsembleSampler: law carries zero mass " +
                        std::to_string(law.zero_mass()) + " < 1 - k/n = " +
                        std::to_string(needed) + "; rank of A^T A cannot realize it");
  }
  EnsembleSampler s(n, k);
  s.law_ = std::move(law);
  s.quantile_ = quantile_eigenvalues;
  return s;
}

Eigen::MatrixXd EnsembleSampler::sample(Rng& rng) const {
  if (is_iid()) {
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(k_)));
    Eigen::MatrixXd a(k_, n_);
    for (int j = 0; j < n_; ++j)
      for (int i = 0; i < k_; ++i) a(i, j) = normal(rng);
    return a;
  }
  const int m = std::min(k_, n_);
  // conditional zero probability among the m nonzero-eligible draws, so the
  // full spectrum (with n - m structural zeros) reproduces the law's atom
  double p0 = law_->zero_mass();
  double structural = static_cast<double>(n_ - m) / n_;
  double pz = std::clamp((p0 - structural) * n_ / m, 0.0, 1.0);

  std::vector<double> d(static_cast<std::size_t>(m));
  if (quantile_) {
    long zeros = std::lround(pz * m);
    for (long i = 0; i < m; ++i) {
      if (i < zeros) {
        d[static_cast<std::size_t>(i)] = 0.0;
      } else {
        // quantile of the positive part via its empirical inverse
        double u = (static_cast<double>(i - zeros) + 0.5) / static_cast<double>(m - zeros);
        // invert cdf restricted to (0, inf): binary search on the law cdf
        double lo = 0.0, hi = law_->support_max();
        double base = law_->zero_mass();
        double mass = 1.0 - base;
        for (int it = 0; it < 60; ++it) {
          double mid = 0.5 * (lo + hi);
          ((law_->cdf(mid) - base) / mass < u ? lo : hi) = mid;
        }
        d[static_cast<std::size_t>(i)] = 0.5 * (lo + hi);
      }
    }
  } else {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (auto& v : d) v = unif(rng) < pz ? 0.0 : law_->sample_positive(rng);
  }

  Eigen::MatrixXd v = haar_orthogonal(k_, rng);
  Eigen::MatrixXd u = haar_orthogonal(n_, rng);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k_, n_);
  // A = V Sigma U^T accumulated rank-one to avoid forming Sigma
  for (int i = 0; i < m; ++i)
    if (d[static_cast<std::size_t>(i)] > 0.0)
      a += std::sqrt(d[static_cast<std::size_t>(i)]) * v.col(i) * u.col(i).transpose();
  return a;
}

}  // namespace replica
