#include "replica/prior.hpp"

#include <algorithm>
#include <cmath>

#include "replica/errors.hpp"
#include "replica/quadrature.hpp"

namespace replica {

void Prior::finalize() {
  double total = 0.0;
  mean_ = 0.0;
  m2_ = 0.0;
  for (const auto& a : atoms_) {
    if (a.weight < 0.0) throw ConfigError("Prior: negative atom probability");
    total += a.weight;
    mean_ += a.weight * a.value;
    m2_ += a.weight * a.value * a.value;
  }
  for (const auto& g : gauss_) {
    if (g.weight < 0.0 || g.sd < 0.0) throw ConfigError("Prior: invalid Gaussian component");
    total += g.weight;
    mean_ += g.weight * g.mean;
    m2_ += g.weight * (g.mean * g.mean + g.sd * g.sd);
  }
  for (const auto& n : custom_nodes_) {
    total += n.w;
    mean_ += n.w * n.x;
    m2_ += n.w * n.x * n.x;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw ConfigError("Prior: probabilities sum to " + std::to_string(total) + ", expected 1");
  if (!(m2_ > 0.0) || !std::isfinite(m2_))
    throw ConfigError("Prior: second moment must be finite and positive");
}

Prior Prior::discrete(std::vector<Atom> atoms) {
  if (atoms.empty()) throw ConfigError("Prior::discrete: no atoms");
  Prior p;
  p.atoms_ = std::move(atoms);
  p.finalize();
  return p;
}

Prior Prior::gaussian(double mean, double variance) {
  if (!(variance > 0.0)) throw ConfigError("Prior::gaussian: variance must be positive");
  Prior p;
  p.gauss_.push_back({mean, std::sqrt(variance), 1.0});
  p.finalize();
  return p;
}

Prior Prior::bernoulli_gaussian(double sparsity, double slab_variance) {
  if (!(sparsity > 0.0 && sparsity <= 1.0))
    throw ConfigError("Prior::bernoulli_gaussian: sparsity must be in (0, 1]");
  if (!(slab_variance > 0.0))
    throw ConfigError("Prior::bernoulli_gaussian: slab variance must be positive");
  Prior p;
  if (sparsity < 1.0) p.atoms_.push_back({0.0, 1.0 - sparsity});
  p.gauss_.push_back({0.0, std::sqrt(slab_variance), sparsity});
  p.finalize();
  return p;
}

Prior Prior::laplace(double scale, int nodes) {
  if (!(scale > 0.0)) throw ConfigError("Prior::laplace: scale must be positive");
  double b = scale;
  Prior p = continuous([b](double x) { return -std::abs(x) / b - std::log(2.0 * b); },
                       28.0 * b, nodes);
  p.custom_sampler_ = [b](Rng& rng) {
    std::uniform_real_distribution<double> unif(-0.5, 0.5);
    double u = unif(rng);
    return -b * std::copysign(1.0, u) * std::log1p(-2.0 * std::abs(u));
  };
  return p;
}

Prior Prior::continuous(std::function<double(double)> log_density, double span, int nodes) {
  if (!log_density) throw ConfigError("Prior::continuous: missing log-density");
  if (!(span > 0.0)) throw ConfigError("Prior::continuous: span must be positive");
  if (nodes < 3) throw ConfigError("Prior::continuous: need at least 3 nodes");
  Prior p;
  Quadrature gl = gauss_legendre(nodes, -span, span);
  p.custom_nodes_.resize(gl.size());
  double total = 0.0;
  for (std::size_t i = 0; i < gl.size(); ++i) {
    double w = gl.weights[i] * std::exp(log_density(gl.nodes[i]));
    if (!std::isfinite(w) || w < 0.0)
      throw NumericError("Prior::continuous: bad density at x=" + std::to_string(gl.nodes[i]));
    p.custom_nodes_[i] = {gl.nodes[i], w};
    total += w;
  }
  if (!(total > 0.0)) throw NumericError("Prior::continuous: density integrates to zero");
  for (auto& n : p.custom_nodes_) n.w /= total;
  p.finalize();
  return p;
}

std::vector<PriorNode> Prior::integration_nodes(int gh_order) const {
  std::vector<PriorNode> out;
  for (const auto& a : atoms_) out.push_back({a.value, a.weight});
  if (!gauss_.empty()) {
    Quadrature gh = gauss_hermite(gh_order);
    for (const auto& g : gauss_)
      for (std::size_t i = 0; i < gh.size(); ++i)
        out.push_back({g.mean + g.sd * gh.nodes[i], g.weight * gh.weights[i]});
  }
  out.insert(out.end(), custom_nodes_.begin(), custom_nodes_.end());
  return out;
}

double expect_xz(const std::function<double(double, double)>& f, const Prior& prior,
                 const Quadrature& z) {
  auto xnodes = prior.integration_nodes(static_cast<int>(z.size()));
  double acc = 0.0;
  for (const auto& xn : xnodes) {
    for (std::size_t i = 0; i < z.size(); ++i) {
      double v = f(xn.x, z.nodes[i]);
      if (!std::isfinite(v))
        throw NumericError("expect_xz: non-finite integrand at x=" + std::to_string(xn.x) +
                           " z=" + std::to_string(z.nodes[i]));
      acc += xn.w * z.weights[i] * v;
    }
  }
  return acc;
}

double Prior::sample(Rng& rng) const {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng);
  for (const auto& a : atoms_) {
    if (u < a.weight) return a.value;
    u -= a.weight;
  }
  for (const auto& g : gauss_) {
    if (u < g.weight) {
      std::normal_distribution<double> normal(g.mean, g.sd);
      return normal(rng);
    }
    u -= g.weight;
  }
  if (custom_sampler_) return custom_sampler_(rng);
  // inverse-CDF on the discretization grid
  double acc = 0.0;
  for (const auto& n : custom_nodes_) {
    acc += n.w;
    if (u < acc) return n.x;
  }
  return custom_nodes_.empty() ? atoms_.back().value : custom_nodes_.back().x;
}

}  // namespace replica
