#include "replica/vector_map.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "replica/errors.hpp"

namespace replica {

double map_objective(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, double lambda,
                     const Utility& u, const Eigen::VectorXd& v) {
  double quad = 0.5 * (y - a * v).squaredNorm() / lambda;
  double pen = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) pen += u.value(v(i));
  return quad + pen;
}

namespace {

double spectral_norm_sq(const Eigen::MatrixXd& a) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(a.cols()).normalized();
  double lam = 0.0;
  for (int it = 0; it < 100; ++it) {
    Eigen::VectorXd w = a.transpose() * (a * v);
    double nrm = w.norm();
    if (nrm == 0.0) return 0.0;
    v = w / nrm;
    lam = nrm;
  }
  return lam;
}

VectorMapResult solve_convex(const Eigen::MatrixXd& a, const Eigen::VectorXd& y,
                             double lambda, const Utility& u,
                             const VectorSolverOptions& opts) {
  const Eigen::Index n = a.cols();
  double lips = spectral_norm_sq(a);
  double eta = lips > 0.0 ? 1.0 / (1.02 * lips) : 1.0;

  auto prox = [&](const Eigen::VectorXd& w, double step) {
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) out(i) = scalar_map(w(i), step * lambda, u);
    return out;
  };
  auto penalty = [&](const Eigen::VectorXd& v) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += u.value(v(i));
    return s;
  };

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd v = x;
  double t = 1.0;
  double fx = 0.5 * y.squaredNorm();  // smooth part at 0
  double obj = fx / lambda + penalty(x);

  VectorMapResult res;
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    Eigen::VectorXd av = a * v;
    Eigen::VectorXd grad = a.transpose() * (av - y);
    double fv = 0.5 * (y - av).squaredNorm();

    Eigen::VectorXd xn;
    double fxn = 0.0;
    for (int bt = 0; bt < 60; ++bt) {
      xn = prox(v - eta * grad, eta);
      fxn = 0.5 * (y - a * xn).squaredNorm();
      Eigen::VectorXd dx = xn - v;
      double quad_model = fv + grad.dot(dx) + dx.squaredNorm() / (2.0 * eta);
      if (fxn <= quad_model + 1e-12 * std::abs(quad_model)) break;
      eta *= 0.5;
    }
    double objn = fxn / lambda + penalty(xn);

    double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    if (objn > obj) {
      v = xn;  // function-value restart
      tn = 1.0;
    } else {
      v = xn + ((t - 1.0) / tn) * (xn - x);
    }

    double rel_dec = std::abs(obj - objn) / std::max(1.0, std::abs(objn));
    x = xn;
    obj = objn;
    t = tn;

    if (rel_dec < opts.tol_objective) {
      Eigen::VectorXd g = a.transpose() * (a * x - y);
      Eigen::VectorXd fixed = prox(x - eta * g, eta);
      double residual = (x - fixed).cwiseAbs().maxCoeff() / eta;
      if (residual < opts.tol_residual) {
        res.residual = residual;
        res.converged = true;
        ++it;
        break;
      }
    }
  }
  if (!res.converged) {
    Eigen::VectorXd g = a.transpose() * (a * x - y);
    Eigen::VectorXd fixed = prox(x - eta * g, eta);
    res.residual = (x - fixed).cwiseAbs().maxCoeff() / eta;
  }
  res.x = std::move(x);
  res.iterations = it;
  res.objective = obj;
  return res;
}

VectorMapResult solve_discrete(const Eigen::MatrixXd& a, const Eigen::VectorXd& y,
                               double lambda, const DiscreteSupportUtility& u,
                               const Utility& full) {
  const Eigen::Index n = a.cols();
  if (n > 20)
    throw ConfigError("vector_map_solve: exhaustive discrete search capped at n = 20");
  auto atoms = u.atoms;
  std::sort(atoms.begin(), atoms.end(),
            [](const auto& p, const auto& q) { return p.value < q.value; });
  double total = std::pow(static_cast<double>(atoms.size()), static_cast<double>(n));
  if (total > double(1 << 25))
    throw ConfigError("vector_map_solve: discrete search space too large");

  // depth-first enumeration with incremental residual updates; lexicographic
  // order over sorted atom values, first strict improvement kept
  Eigen::VectorXd r = y;  // residual y - A v with v built up coordinate-wise
  std::vector<std::size_t> assign(static_cast<std::size_t>(n), 0);
  Eigen::VectorXd best = Eigen::VectorXd::Constant(n, atoms.front().value);
  double best_obj = std::numeric_limits<double>::infinity();
  double cost_acc = 0.0;

  // start from all-first-atom
  for (Eigen::Index j = 0; j < n; ++j) r -= atoms.front().value * a.col(j);
  cost_acc = static_cast<double>(n) * atoms.front().cost;

  std::function<void(Eigen::Index)> rec = [&](Eigen::Index j) {
    if (j == n) {
      double obj = 0.5 * r.squaredNorm() / lambda + cost_acc;
      if (obj < best_obj) {
        best_obj = obj;
        for (Eigen::Index i = 0; i < n; ++i) best(i) = atoms[assign[static_cast<std::size_t>(i)]].value;
      }
      return;
    }
    for (std::size_t s = 0; s < atoms.size(); ++s) {
      if (s > 0) {
        r -= (atoms[s].value - atoms[s - 1].value) * a.col(j);
        cost_acc += atoms[s].cost - atoms[s - 1].cost;
      }
      assign[static_cast<std::size_t>(j)] = s;
      rec(j + 1);
    }
    // restore to first atom for this coordinate
    r += (atoms.back().value - atoms.front().value) * a.col(j);
    cost_acc -= atoms.back().cost - atoms.front().cost;
    assign[static_cast<std::size_t>(j)] = 0;
  };
  rec(0);

  VectorMapResult res;
  res.x = best;
  res.objective = best_obj;
  res.iterations = static_cast<int>(std::min(total, 2.0e9));
  res.converged = true;
  res.residual = 0.0;
  (void)full;
  return res;
}

}  // namespace

VectorMapResult vector_map_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& y,
                                 double lambda, const Utility& u,
                                 const VectorSolverOptions& opts) {
  if (a.rows() != y.size()) throw ConfigError("vector_map_solve: dimension mismatch");
  if (!(lambda > 0.0)) throw ConfigError("vector_map_solve: lambda must be positive");
  if (u.is_convex()) return solve_convex(a, y, lambda, u, opts);
  if (u.is_discrete_support())
    return solve_discrete(a, y, lambda, std::get<DiscreteSupportUtility>(u.variant()), u);
  throw ConfigError("vector_map_solve: nonconvex continuous utilities are unsupported");
}

Eigen::VectorXd ridge_normal_equations(const Eigen::MatrixXd& a, const Eigen::VectorXd& y,
                                       double lambda, double alpha) {
  Eigen::MatrixXd m = a.transpose() * a;
  m.diagonal().array() += lambda * alpha;
  return m.ldlt().solve(a.transpose() * y);
}

}  // namespace replica
