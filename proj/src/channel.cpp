#include "replica/channel.hpp"

#include <algorithm>
#include <cmath>

#include "replica/errors.hpp"
#include "replica/numeric.hpp"
#include "replica/onersb.hpp"
#include "replica/quadrature.hpp"

namespace replica {

namespace {

// fine z1 grid used by samplers and two-tap cdf rows (cell midpoints)
constexpr int kFineCells = 1201;
constexpr double kFineSpan = 12.0;

// sup{y : g(y) <= t} (strict=false) or sup{y : g(y) < t} (strict=true)
// for a monotone nondecreasing scalar MAP (convex utility). Closed form for
// the standard penalties, bisection otherwise.
double monotone_boundary(const Utility& u, double lambda_s, double t, bool strict) {
  if (const auto* q = std::get_if<QuadraticUtility>(&u.variant()))
    return t * (1.0 + q->alpha * lambda_s);
  if (const auto* l1 = std::get_if<L1Utility>(&u.variant())) {
    double thr = l1->alpha * lambda_s;
    bool upper = strict ? (t > 0.0) : (t >= 0.0);
    return upper ? t + thr : t - thr;
  }
  if (const auto* en = std::get_if<ElasticNetUtility>(&u.variant())) {
    double thr = en->alpha1 * lambda_s;
    double tp = t * (1.0 + en->alpha2 * lambda_s);
    bool upper = strict ? (t > 0.0) : (t >= 0.0);
    return upper ? tp + thr : tp - thr;
  }
  auto inside = [&](double y) {
    double g = scalar_map(y, lambda_s, u);
    return strict ? (g < t) : (g <= t);
  };
  double width = 1.0 + std::abs(t) + lambda_s;
  double lo = t - width;
  int guard = 0;
  while (!inside(lo)) {
    width *= 2.0;
    lo = t - width;
    if (++guard > 200) throw NumericError("monotone_boundary: lower expansion failed");
  }
  double hi = std::max(t + width, lo + width);
  guard = 0;
  while (inside(hi)) {
    width *= 2.0;
    hi += width;
    if (++guard > 200) throw NumericError("monotone_boundary: upper expansion failed");
  }
  for (int it = 0; it < 160 && hi - lo > 1e-14 * (1.0 + std::abs(hi)); ++it) {
    double mid = 0.5 * (lo + hi);
    (inside(mid) ? lo : hi) = mid;
  }
  return lo;
}

struct EnvelopeSegment {
  double y_end;  // winner active for y < y_end; last segment has +inf
  double value;
};

// Winner regions of argmin_a [ (y-a)^2/(2 lambda_s) + cost(a) ] over a finite
// support: equal-curvature parabolas reduce to a lower envelope of lines, so
// the winner value is a nondecreasing step function of y.
std::vector<EnvelopeSegment> discrete_envelope(const DiscreteSupportUtility& u,
                                               double lambda_s) {
  auto atoms = u.atoms;
  std::sort(atoms.begin(), atoms.end(),
            [](const auto& a, const auto& b) { return a.value < b.value; });
  // drop duplicate values, keeping the cheaper cost
  std::vector<DiscreteSupportUtility::Atom> uniq;
  for (const auto& a : atoms) {
    if (!uniq.empty() && uniq.back().value == a.value)
      uniq.back().cost = std::min(uniq.back().cost, a.cost);
    else
      uniq.push_back(a);
  }
  // y where atom b starts beating atom a (b.value > a.value)
  auto cross = [&](const auto& a, const auto& b) {
    return 0.5 * (a.value + b.value) +
           lambda_s * (b.cost - a.cost) / (b.value - a.value);
  };
  const double ninf = -std::numeric_limits<double>::infinity();
  std::vector<DiscreteSupportUtility::Atom> hull;
  std::vector<double> from;  // y from which hull[i] wins
  for (const auto& a : uniq) {
    double x = ninf;
    while (!hull.empty()) {
      x = cross(hull.back(), a);
      if (x <= from.back()) {
        // previous atom never wins once this one exists
        hull.pop_back();
        from.pop_back();
        x = ninf;
        continue;
      }
      break;
    }
    hull.push_back(a);
    from.push_back(hull.size() == 1 ? ninf : x);
  }
  std::vector<EnvelopeSegment> segs(hull.size());
  for (std::size_t i = 0; i < hull.size(); ++i) {
    segs[i].value = hull[i].value;
    segs[i].y_end = (i + 1 < hull.size()) ? from[i + 1]
                                          : std::numeric_limits<double>::infinity();
  }
  return segs;
}

struct FineGrid {
  double h;
  std::vector<double> z;  // cell midpoints
};

FineGrid make_fine_grid() {
  FineGrid fg;
  fg.h = 2.0 * kFineSpan / kFineCells;
  fg.z.resize(kFineCells);
  for (int m = 0; m < kFineCells; ++m) fg.z[m] = -kFineSpan + (m + 0.5) * fg.h;
  return fg;
}

// normalized cumulative tilted weights of z1 over the fine grid, for fixed
// (x, z0); cum[m] approximates P(z1 <= right edge of cell m)
std::vector<double> tilted_row_cum(const FineGrid& fg, double x, double z0,
                                   double l0s, double l1s, double ls, double mu,
                                   const Utility& u) {
  std::vector<double> lw(fg.z.size());
  for (std::size_t m = 0; m < fg.z.size(); ++m) {
    double z1 = fg.z[m];
    lw[m] = tilt_log_factor(x, z0, z1, l0s, l1s, ls, mu, u) - 0.5 * z1 * z1;
  }
  double lz = log_sum_exp(lw);
  if (!std::isfinite(lz)) throw NumericError("tilted_row_cum: row vanished");
  std::vector<double> cum(fg.z.size());
  double acc = 0.0;
  for (std::size_t m = 0; m < fg.z.size(); ++m) {
    acc += std::exp(lw[m] - lz);
    cum[m] = acc;
  }
  for (double& c : cum) c /= acc;
  return cum;
}

double interp_row_cdf(const FineGrid& fg, const std::vector<double>& cum, double cut) {
  double left_edge0 = fg.z.front() - 0.5 * fg.h;
  if (cut <= left_edge0) return 0.0;
  double idx = (cut - left_edge0) / fg.h;
  if (idx >= static_cast<double>(cum.size())) return 1.0;
  std::size_t m = static_cast<std::size_t>(idx);
  double frac = idx - static_cast<double>(m);
  double lo = m == 0 ? 0.0 : cum[m - 1];
  return lo + frac * (cum[m] - lo);
}

double sample_row(const FineGrid& fg, const std::vector<double>& cum, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng);
  auto it = std::lower_bound(cum.begin(), cum.end(), u);
  std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()),
                                        cum.size() - 1);
  double lo = m == 0 ? 0.0 : cum[m - 1];
  double w = cum[m] - lo;
  double frac = w > 0.0 ? (u - lo) / w : 0.5;
  return fg.z[m] - 0.5 * fg.h + frac * fg.h;
}

}  // namespace

struct ConditionalLaw::Impl {
  double v = 0.0;
  Utility utility = Utility::zero();
  double l0s = 0.0, l1s = 0.0, ls = 1.0, mu = 0.0;
  bool two_tap = false;
  double sig0 = 0.0, sig1 = 0.0;

  enum class Mode { kMonotone, kEnvelope, kHistogram } mode = Mode::kMonotone;

  // kEnvelope
  std::vector<EnvelopeSegment> segments;

  // kHistogram: pooled (g, weight) support sorted by g
  std::vector<double> hist_g;
  std::vector<double> hist_cum;

  // two-tap monotone: tilted rows per z0 node
  Quadrature z0q;
  FineGrid fine;
  std::vector<std::vector<double>> row_cum;

  double cdf_impl(double t, bool left) const {
    switch (mode) {
      case Mode::kMonotone: {
        double y = monotone_boundary(utility, ls, t, left);
        if (!two_tap) {
          if (sig0 == 0.0) return y >= v ? 1.0 : 0.0;
          return normal_cdf((y - v) / sig0);
        }
        double acc = 0.0;
        for (std::size_t j = 0; j < z0q.size(); ++j) {
          double cut = (y - v - sig0 * z0q.nodes[j]) / sig1;
          acc += z0q.weights[j] * interp_row_cdf(fine, row_cum[j], cut);
        }
        return acc;
      }
      case Mode::kEnvelope: {
        double boundary = -std::numeric_limits<double>::infinity();
        for (const auto& s : segments) {
          bool include = left ? (s.value < t) : (s.value <= t);
          if (include)
            boundary = s.y_end;
          else
            break;
        }
        if (boundary == -std::numeric_limits<double>::infinity()) return 0.0;
        if (boundary == std::numeric_limits<double>::infinity()) return 1.0;
        if (sig0 == 0.0) return boundary >= v ? 1.0 : 0.0;
        return normal_cdf((boundary - v) / sig0);
      }
      case Mode::kHistogram: {
        auto it = left ? std::lower_bound(hist_g.begin(), hist_g.end(), t)
                       : std::upper_bound(hist_g.begin(), hist_g.end(), t);
        if (it == hist_g.begin()) return 0.0;
        return hist_cum[static_cast<std::size_t>(it - hist_g.begin()) - 1];
      }
    }
    return 0.0;
  }

  double sample_impl(Rng& rng) const {
    std::normal_distribution<double> normal(0.0, 1.0);
    if (!two_tap) return scalar_map(v + sig0 * normal(rng), ls, utility);
    double z0 = normal(rng);
    auto cum = tilted_row_cum(fine, v, z0, l0s, l1s, ls, mu, utility);
    double z1 = sample_row(fine, cum, rng);
    return scalar_map(v + sig0 * z0 + sig1 * z1, ls, utility);
  }
};

double ConditionalLaw::cdf(double t) const { return impl_->cdf_impl(t, false); }
double ConditionalLaw::cdf_left(double t) const { return impl_->cdf_impl(t, true); }
double ConditionalLaw::sample(Rng& rng) const { return impl_->sample_impl(rng); }

DecoupledChannel::DecoupledChannel(Prior prior, Utility utility)
    : prior_(std::move(prior)), utility_(std::move(utility)) {}

DecoupledChannel DecoupledChannel::rs(Prior prior, Utility utility, double lambda0_s,
                                      double lambda_s) {
  if (!(lambda0_s >= 0.0)) throw ConfigError("DecoupledChannel: lambda0_s must be >= 0");
  if (!(lambda_s > 0.0)) throw ConfigError("DecoupledChannel: lambda_s must be > 0");
  DecoupledChannel ch(std::move(prior), std::move(utility));
  ch.lambda0_s_ = lambda0_s;
  ch.lambda_s_ = lambda_s;
  return ch;
}

DecoupledChannel DecoupledChannel::one_rsb(Prior prior, Utility utility,
                                           double lambda0_s, double lambda1_s,
                                           double lambda_s, double mu) {
  if (!(lambda1_s > 0.0))
    throw ConfigError("DecoupledChannel::one_rsb: need lambda1_s > 0 (use rs otherwise)");
  if (!(mu > 0.0)) throw ConfigError("DecoupledChannel::one_rsb: need mu > 0");
  DecoupledChannel ch = rs(std::move(prior), std::move(utility), lambda0_s, lambda_s);
  ch.two_tap_ = true;
  ch.lambda1_s_ = lambda1_s;
  ch.mu_ = mu;
  return ch;
}

std::pair<double, double> DecoupledChannel::sample(Rng& rng) const {
  double x = prior_.sample(rng);
  return {x, sample_estimate(x, rng)};
}

double DecoupledChannel::sample_estimate(double x, Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  double sig0 = std::sqrt(lambda0_s_);
  if (!two_tap_) return scalar_map(x + sig0 * normal(rng), lambda_s_, utility_);
  double z0 = normal(rng);
  FineGrid fg = make_fine_grid();
  auto cum = tilted_row_cum(fg, x, z0, lambda0_s_, lambda1_s_, lambda_s_, mu_, utility_);
  double z1 = sample_row(fg, cum, rng);
  return scalar_map(x + sig0 * z0 + std::sqrt(lambda1_s_) * z1, lambda_s_, utility_);
}

ConditionalLaw DecoupledChannel::conditional(double x) const {
  auto impl = std::make_shared<ConditionalLaw::Impl>();
  impl->v = x;
  impl->utility = utility_;
  impl->l0s = lambda0_s_;
  impl->l1s = lambda1_s_;
  impl->ls = lambda_s_;
  impl->mu = mu_;
  impl->two_tap = two_tap_;
  impl->sig0 = std::sqrt(lambda0_s_);
  impl->sig1 = std::sqrt(lambda1_s_);

  using Mode = ConditionalLaw::Impl::Mode;
  if (utility_.is_convex()) {
    impl->mode = Mode::kMonotone;
    if (two_tap_) {
      impl->z0q = gauss_hermite(61);
      impl->fine = make_fine_grid();
      impl->row_cum.resize(impl->z0q.size());
      for (std::size_t j = 0; j < impl->z0q.size(); ++j)
        impl->row_cum[j] = tilted_row_cum(impl->fine, x, impl->z0q.nodes[j], lambda0_s_,
                                          lambda1_s_, lambda_s_, mu_, utility_);
    }
  } else if (utility_.is_discrete_support() && !two_tap_) {
    impl->mode = Mode::kEnvelope;
    impl->segments =
        discrete_envelope(std::get<DiscreteSupportUtility>(utility_.variant()), lambda_s_);
  } else {
    // pooled discretized law over (z0 nodes x fine z1 cells) or a single fine
    // z grid for one tap
    impl->mode = Mode::kHistogram;
    FineGrid fg = make_fine_grid();
    std::vector<std::pair<double, double>> gw;
    if (!two_tap_) {
      gw.reserve(fg.z.size());
      double tot = 0.0;
      for (double z : fg.z) {
        double w = normal_pdf(z);
        gw.push_back({scalar_map(x + impl->sig0 * z, lambda_s_, utility_), w});
        tot += w;
      }
      for (auto& p : gw) p.second /= tot;
    } else {
      Quadrature z0q = gauss_hermite(61);
      for (std::size_t j = 0; j < z0q.size(); ++j) {
        auto cum = tilted_row_cum(fg, x, z0q.nodes[j], lambda0_s_, lambda1_s_, lambda_s_,
                                  mu_, utility_);
        double prev = 0.0;
        for (std::size_t m = 0; m < fg.z.size(); ++m) {
          double w = (cum[m] - prev) * z0q.weights[j];
          prev = cum[m];
          double y = x + impl->sig0 * z0q.nodes[j] + impl->sig1 * fg.z[m];
          gw.push_back({scalar_map(y, lambda_s_, utility_), w});
        }
      }
    }
    std::sort(gw.begin(), gw.end());
    impl->hist_g.reserve(gw.size());
    impl->hist_cum.reserve(gw.size());
    double acc = 0.0;
    for (const auto& [g, w] : gw) {
      acc += w;
      if (!impl->hist_g.empty() && impl->hist_g.back() == g)
        impl->hist_cum.back() = acc;
      else {
        impl->hist_g.push_back(g);
        impl->hist_cum.push_back(acc);
      }
    }
  }
  ConditionalLaw law;
  law.impl_ = std::move(impl);
  return law;
}

double DecoupledChannel::conditional_cdf(double x, double t, bool left_limit) const {
  ConditionalLaw law = conditional(x);
  return left_limit ? law.cdf_left(t) : law.cdf(t);
}

double DecoupledChannel::moment(int k, int l, int quad_order) const {
  if (k < 0 || l < 0) throw DomainError("DecoupledChannel::moment: need k, l >= 0");
  if (!two_tap_) {
    auto xnodes = prior_.integration_nodes(quad_order);
    Quadrature z = gauss_hermite(quad_order);
    double sig0 = std::sqrt(lambda0_s_);
    double acc = 0.0;
    for (const auto& xn : xnodes)
      for (std::size_t j = 0; j < z.size(); ++j) {
        double g = scalar_map(xn.x + sig0 * z.nodes[j], lambda_s_, utility_);
        acc += xn.w * z.weights[j] * std::pow(g, k) * std::pow(xn.x, l);
      }
    return acc;
  }
  OneRsbEffective eff{lambda0_s_, lambda1_s_, lambda_s_};
  TiltedGrid grid = build_tilted_grid(eff, mu_, prior_, utility_, quad_order);
  double acc = 0.0;
  for (std::size_t i = 0; i < grid.nx(); ++i) {
    double xl = std::pow(grid.xnodes[i].x, l);
    for (std::size_t j = 0; j < grid.n0(); ++j) {
      double rw = grid.row_weight(i, j);
      for (std::size_t m = 0; m < grid.n1(); ++m) {
        std::size_t c = grid.cell(i, j, m);
        acc += rw * grid.weights[c] * std::pow(grid.g[c], k) * xl;
      }
    }
  }
  return acc;
}

double DecoupledChannel::predicted_q(int quad_order) const {
  if (!two_tap_) {
    auto xnodes = prior_.integration_nodes(quad_order);
    Quadrature z = gauss_hermite(quad_order);
    double sig0 = std::sqrt(lambda0_s_);
    double acc = 0.0;
    for (const auto& xn : xnodes)
      for (std::size_t j = 0; j < z.size(); ++j) {
        double g = scalar_map(xn.x + sig0 * z.nodes[j], lambda_s_, utility_);
        acc += xn.w * z.weights[j] * (g - xn.x) * (g - xn.x);
      }
    return acc;
  }
  OneRsbEffective eff{lambda0_s_, lambda1_s_, lambda_s_};
  TiltedGrid grid = build_tilted_grid(eff, mu_, prior_, utility_, quad_order);
  double acc = 0.0;
  for (std::size_t i = 0; i < grid.nx(); ++i) {
    double x = grid.xnodes[i].x;
    for (std::size_t j = 0; j < grid.n0(); ++j) {
      double rw = grid.row_weight(i, j);
      for (std::size_t m = 0; m < grid.n1(); ++m) {
        std::size_t c = grid.cell(i, j, m);
        double d = grid.g[c] - x;
        acc += rw * grid.weights[c] * d * d;
      }
    }
  }
  return acc;
}

}  // namespace replica
