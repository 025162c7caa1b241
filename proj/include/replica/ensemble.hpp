#pragma once

#include <Eigen/Dense>
#include <optional>

#include "replica/rng.hpp"
#include "replica/spectral.hpp"

namespace replica {

/// Haar-distributed orthogonal matrix: QR of an i.i.d. standard Gaussian
/// matrix with column signs fixed so the triangular factor has positive
/// diagonal.
Eigen::MatrixXd haar_orthogonal(int n, Rng& rng);

/// Draws k x n system matrices whose J = A^T A follows a configured spectral
/// law in the large-system limit.
class EnsembleSampler {
 public:
  /// Entries N(0, 1/k); J follows Marchenko-Pastur with r = n/k.
  static EnsembleSampler iid_gaussian(int n, int k);
  /// A = V Sigma U^T with V, U independent Haar and the min(k, n)
  /// nonzero-eligible eigenvalues of Sigma^T Sigma drawn i.i.d. from the law
  /// (or placed at its quantiles); structural zeros are forced when n > k.
  /// Requires the law to carry mass >= 1 - k/n at zero when n > k.
  static EnsembleSampler haar_spectral(int n, int k, SpectralLaw law,
                                       bool quantile_eigenvalues = false);

  int n() const { return n_; }
  int k() const { return k_; }
  bool is_iid() const { return !law_.has_value(); }
  const SpectralLaw* law() const { return law_ ? &*law_ : nullptr; }

  Eigen::MatrixXd sample(Rng& rng) const;

 private:
  EnsembleSampler(int n, int k) : n_(n), k_(k) {}
  int n_, k_;
  std::optional<SpectralLaw> law_;
  bool quantile_ = false;
};

}  // namespace replica
