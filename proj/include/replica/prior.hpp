#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "replica/rng.hpp"

namespace replica {

/// One point of a discretized source distribution.
struct PriorNode {
  double x;
  double w;
};

/// Source distribution p_x. Represented as a mixture of point masses and
/// Gaussian components, which covers discrete sources, Gaussian sources,
/// Bernoulli-Gaussian sources and mixtures thereof exactly; an arbitrary
/// continuous density is carried as a fixed quadrature discretization.
/// Immutable after construction.
class Prior {
 public:
  struct Atom {
    double value;
    double weight;
  };
  struct GaussianComponent {
    double mean;
    double sd;
    double weight;
  };

  /// Pure point masses; weights must sum to 1 within 1e-12.
  static Prior discrete(std::vector<Atom> atoms);
  static Prior gaussian(double mean, double variance);
  /// x = b * g with b ~ Bernoulli(sparsity), g ~ N(0, slab_variance).
  static Prior bernoulli_gaussian(double sparsity, double slab_variance);
  /// Density (1/2b) exp(-|x|/b); carried via quadrature discretization,
  /// sampled exactly.
  static Prior laplace(double scale, int nodes = 401);
  /// General continuous prior from a (possibly unnormalized) log-density.
  /// Discretized by Gauss-Legendre on [-span, span]; sampling uses
  /// inverse-CDF interpolation on that grid.
  static Prior continuous(std::function<double(double)> log_density, double span,
                          int nodes = 401);

  double mean() const { return mean_; }
  double second_moment() const { return m2_; }

  /// True when the distribution is purely atomic.
  bool is_discrete() const { return gauss_.empty() && custom_nodes_.empty(); }
  /// Point masses (possibly empty, possibly only part of the mass).
  const std::vector<Atom>& atoms() const { return atoms_; }

  /// Expectation nodes: atoms kept exact, Gaussian components expanded by a
  /// probabilists' Gauss-Hermite rule of the given order. Total weight 1.
  std::vector<PriorNode> integration_nodes(int gh_order) const;

  double sample(Rng& rng) const;

 private:
  Prior() = default;
  void finalize();

  std::vector<Atom> atoms_;
  std::vector<GaussianComponent> gauss_;
  std::vector<PriorNode> custom_nodes_;             // pre-discretized continuous part
  std::function<double(Rng&)> custom_sampler_;      // exact sampler when known
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct Quadrature;

/// E_x E_z f(x, z) with z standard Gaussian: sum_x p(x) sum_i w_i f(x, z_i).
/// Gaussian prior components are expanded at the z-rule's order. Non-finite
/// integrand values are reported with their grid point.
double expect_xz(const std::function<double(double, double)>& f, const Prior& prior,
                 const Quadrature& z);

}  // namespace replica
