#pragma once

#include <Eigen/Dense>

#include "replica/utility.hpp"

namespace replica {

struct VectorSolverOptions {
  double tol_objective = 1e-10;  // relative objective decrease
  double tol_residual = 1e-8;    // prox-gradient residual, inf norm
  int max_iter = 200000;
};

struct VectorMapResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double objective = 0.0;  // (1/2 lambda) ||y - A x||^2 + sum u(x_i)
  double residual = 0.0;   // first-order optimality measure at x
  bool converged = false;
};

/// objective value (1/2 lambda) ||y - A v||^2 + sum_i u(v_i)
double map_objective(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, double lambda,
                     const Utility& u, const Eigen::VectorXd& v);

/// Vector MAP estimate argmin_v (1/2 lambda) ||y - A v||^2 + sum u(v_i).
/// Convex separable utilities: accelerated proximal gradient with
/// backtracking and function-value restarts; the per-coordinate prox is the
/// scalar MAP with parameter lambda * step. Discrete supports: exhaustive
/// search (n <= 20). Nonconvex continuous utilities are unsupported.
VectorMapResult vector_map_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& y,
                                 double lambda, const Utility& u,
                                 const VectorSolverOptions& opts = {});

/// Direct ridge solve (A^T A + lambda alpha I)^{-1} A^T y; internal oracle
/// for the quadratic-utility case.
Eigen::VectorXd ridge_normal_equations(const Eigen::MatrixXd& a, const Eigen::VectorXd& y,
                                       double lambda, double alpha);

}  // namespace replica
