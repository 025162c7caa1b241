#pragma once

#include <functional>
#include <vector>

namespace replica {

/// Nodes and weights of a probability quadrature rule: weights are positive
/// and sum to 1, so sums approximate expectations directly.
struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

/// Probabilists' Gauss-Hermite rule of the given order, normalized against
/// the standard Gaussian measure Dz. Exact for polynomials of degree
/// <= 2*order - 1. Orders above 200 are rejected.
Quadrature gauss_hermite(int order);

/// Gauss-Legendre rule rescaled to [a, b] with plain (non-probability)
/// weights summing to b - a.
Quadrature gauss_legendre(int order, double a, double b);

}  // namespace replica
