#include "replica/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "replica/errors.hpp"

namespace replica {

// Golub-Welsch: nodes are eigenvalues of the Jacobi matrix of the orthogonal
// polynomial recurrence, weights the squared first eigenvector components.
// The eigenvector matrix is orthogonal, so the weights sum to 1 exactly.
Quadrature gauss_hermite(int order) {
  if (order < 1) throw ConfigError("gauss_hermite: order must be >= 1");
  if (order > 200) throw ConfigError("gauss_hermite: order > 200 is numerically unstable");
  if (order == 1) return {{0.0}, {1.0}};

  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int i = 1; i < order; ++i) {
    // probabilists' Hermite: off-diagonal sqrt(i)
    double b = std::sqrt(static_cast<double>(i));
    jacobi(i, i - 1) = b;
    jacobi(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  Quadrature q;
  q.nodes.resize(order);
  q.weights.resize(order);
  for (int i = 0; i < order; ++i) {
    q.nodes[i] = es.eigenvalues()(i);
    double v0 = es.eigenvectors()(0, i);
    q.weights[i] = v0 * v0;
  }
  return q;
}

Quadrature gauss_legendre(int order, double a, double b) {
  if (order < 1) throw ConfigError("gauss_legendre: order must be >= 1");
  if (!(b > a)) throw ConfigError("gauss_legendre: need b > a");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int i = 1; i < order; ++i) {
    double k = static_cast<double>(i);
    double off = k / std::sqrt(4.0 * k * k - 1.0);
    jacobi(i, i - 1) = off;
    jacobi(i - 1, i) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  Quadrature q;
  q.nodes.resize(order);
  q.weights.resize(order);
  double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (int i = 0; i < order; ++i) {
    q.nodes[i] = mid + half * es.eigenvalues()(i);
    double v0 = es.eigenvectors()(0, i);
    q.weights[i] = 2.0 * v0 * v0 * half;
  }
  return q;
}

}  // namespace replica
