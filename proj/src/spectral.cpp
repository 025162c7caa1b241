#include "replica/spectral.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "replica/errors.hpp"
#include "replica/numeric.hpp"

namespace replica {

namespace {

double mp_edge_lo(double r) {
  double d = 1.0 - std::sqrt(r);
  return d * d;
}

double mp_edge_hi(double r) {
  double d = 1.0 + std::sqrt(r);
  return d * d;
}

// bulk density of the mean-1 MP law (without the atom at 0)
double mp_density(double r, double x) {
  double a = mp_edge_lo(r), b = mp_edge_hi(r);
  if (x <= a || x >= b) return 0.0;
  return std::sqrt((b - x) * (x - a)) / (2.0 * kPi * r * x);
}

}  // namespace

SpectralLaw::SpectralLaw(Variant v) : v_(std::move(v)) {
  if (const auto* mp = std::get_if<MarchenkoPastur>(&v_)) {
    if (!(mp->r > 0.0) || !std::isfinite(mp->r))
      throw ConfigError("MarchenkoPastur: aspect ratio r must be positive");
    build_bulk_table();
  } else if (const auto* sp = std::get_if<ScaledProjector>(&v_)) {
    if (!(sp->r >= 1.0)) throw ConfigError("ScaledProjector: need r >= 1");
    if (!(sp->c > 0.0)) throw ConfigError("ScaledProjector: need c > 0");
  } else {
    auto& eig = std::get<Empirical>(v_).eigenvalues;
    if (eig.empty()) throw ConfigError("Empirical: eigenvalue list is empty");
    for (double& e : eig) {
      if (!std::isfinite(e)) throw ConfigError("Empirical: non-finite eigenvalue");
      if (e < 0.0) {
        if (e < -1e-10) throw ConfigError("Empirical: negative eigenvalue " + std::to_string(e));
        e = 0.0;  // numerical dust from an eigensolver
      }
    }
    std::sort(eig.begin(), eig.end());
  }
}

SpectralLaw SpectralLaw::marchenko_pastur(double r) { return SpectralLaw(MarchenkoPastur{r}); }

SpectralLaw SpectralLaw::scaled_projector(double r, double c) {
  return SpectralLaw(ScaledProjector{r, c});
}

SpectralLaw SpectralLaw::empirical(std::vector<double> eigenvalues) {
  return SpectralLaw(Empirical{std::move(eigenvalues)});
}

SpectralLaw SpectralLaw::empirical_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open eigenvalue file: " + path);
  std::vector<double> eig;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double v;
    if (ls >> v) eig.push_back(v);
  }
  return empirical(std::move(eig));
}

// Cumulative mass of the MP bulk, tabulated with the substitution
// x = a + (b-a) sin^2(theta) which removes the square-root edge behavior.
void SpectralLaw::build_bulk_table() {
  const auto& mp = std::get<MarchenkoPastur>(v_);
  double a = mp_edge_lo(mp.r), b = mp_edge_hi(mp.r);
  const int kCells = 2048;  // Simpson cells in theta
  blk_x_.resize(kCells + 1);
  blk_f_.resize(kCells + 1);
  auto integrand = [&](double th) {
    double s = std::sin(2.0 * th);
    double x = a + (b - a) * std::sin(th) * std::sin(th);
    return (b - a) * (b - a) * s * s / (2.0 * kPi * mp.r * x);
  };
  double h = (kPi / 2.0) / kCells;
  blk_x_[0] = a;
  blk_f_[0] = 0.0;
  double acc = 0.0;
  for (int i = 0; i < kCells; ++i) {
    double t0 = i * h, t1 = (i + 1) * h;
    acc += h / 6.0 * (integrand(t0) + 4.0 * integrand(0.5 * (t0 + t1)) + integrand(t1));
    double th = t1;
    blk_x_[i + 1] = a + (b - a) * std::sin(th) * std::sin(th);
    blk_f_[i + 1] = acc;
  }
  // pin the total bulk mass to its exact value
  double target = std::min(1.0, 1.0 / mp.r);
  double scale = target / acc;
  for (double& f : blk_f_) f *= scale;
}

double SpectralLaw::mean() const {
  if (std::holds_alternative<MarchenkoPastur>(v_)) return 1.0;
  if (const auto* sp = std::get_if<ScaledProjector>(&v_)) return sp->c / sp->r;
  const auto& eig = std::get<Empirical>(v_).eigenvalues;
  return std::accumulate(eig.begin(), eig.end(), 0.0) / static_cast<double>(eig.size());
}

double SpectralLaw::second_moment() const {
  if (const auto* mp = std::get_if<MarchenkoPastur>(&v_)) return 1.0 + mp->r;
  if (const auto* sp = std::get_if<ScaledProjector>(&v_)) return sp->c * sp->c / sp->r;
  const auto& eig = std::get<Empirical>(v_).eigenvalues;
  double s = 0.0;
  for (double e : eig) s += e * e;
  return s / static_cast<double>(eig.size());
}

double SpectralLaw::support_min() const {
  if (const auto* mp = std::get_if<MarchenkoPastur>(&v_))
    return mp->r >= 1.0 ? 0.0 : mp_edge_lo(mp->r);
  if (const auto* sp = std::get_if<ScaledProjector>(&v_)) return sp->r > 1.0 ? 0.0 : sp->c;
  return std::get<Empirical>(v_).eigenvalues.front();
}

double SpectralLaw::support_max() const {
  if (const auto* mp = std::get_if<MarchenkoPastur>(&v_)) return mp_edge_hi(mp->r);
  if (const auto* sp = std::get_if<ScaledProjector>(&v_)) return sp->c;
  return std::get<Empirical>(v_).eigenvalues.back();
}

double SpectralLaw::zero_mass() const {
  if (const auto* mp = std::get_if<MarchenkoPastur>(&v_))
    return std::max(0.0, 1.0 - 1.0 / mp->r);
  if (const auto* sp = std::get_if<ScaledProjector>(&v_)) return 1.0 - 1.0 / sp->r;
  const auto& eig = std::get<Empirical>(v_).eigenvalues;
  auto nz = std::count(eig.begin(), eig.end(), 0.0);
  return static_cast<double>(nz) / static_cast<double>(eig.size());
}

double SpectralLaw::cdf(double x) const {
  if (x < 0.0) return 0.0;
  if (std::holds_alternative<MarchenkoPastur>(v_)) {
    double f = zero_mass();
    if (x <= blk_x_.front()) return f;
    if (x >= blk_x_.back()) return 1.0;
    auto it = std::upper_bound(blk_x_.begin(), blk_x_.end(), x);
    std::size_t i = static_cast<std::size_t>(it - blk_x_.begin()) - 1;
    double t = (x - blk_x_[i]) / (blk_x_[i + 1] - blk_x_[i]);
    return f + blk_f_[i] + t * (blk_f_[i + 1] - blk_f_[i]);
  }
  if (const auto* sp = std::get_if<ScaledProjector>(&v_)) {
    double f = 1.0 - 1.0 / sp->r;
    if (x >= sp->c) f += 1.0 / sp->r;
    return f;
  }
  const auto& eig = std::get<Empirical>(v_).eigenvalues;
  auto it = std::upper_bound(eig.begin(), eig.end(), x);
  return static_cast<double>(it - eig.begin()) / static_cast<double>(eig.size());
}

double SpectralLaw::sample_positive(Rng& rng) const {
  if (std::holds_alternative<MarchenkoPastur>(v_)) {
    // inverse-CDF on the tabulated bulk
    std::uniform_real_distribution<double> unif(0.0, blk_f_.back());
    double u = unif(rng);
    auto it = std::lower_bound(blk_f_.begin(), blk_f_.end(), u);
    std::size_t i = std::min<std::size_t>(
        static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - blk_f_.begin() - 1, 0)),
        blk_f_.size() - 2);
    double df = blk_f_[i + 1] - blk_f_[i];
    double t = df > 0.0 ? (u - blk_f_[i]) / df : 0.5;
    return blk_x_[i] + t * (blk_x_[i + 1] - blk_x_[i]);
  }
  if (const auto* sp = std::get_if<ScaledProjector>(&v_)) return sp->c;
  const auto& eig = std::get<Empirical>(v_).eigenvalues;
  auto first_pos = std::upper_bound(eig.begin(), eig.end(), 0.0);
  if (first_pos == eig.end()) throw NumericError("sample_positive: law has no positive mass");
  std::uniform_int_distribution<std::size_t> pick(
      static_cast<std::size_t>(first_pos - eig.begin()), eig.size() - 1);
  return eig[pick(rng)];
}

double stieltjes(const SpectralLaw& law, double s) {
  if (!(s < law.support_min()))
    throw DomainError("stieltjes: s must lie strictly below the support");
  if (const auto* mp = std::get_if<MarchenkoPastur>(&law.variant())) {
    double r = mp->r;
    if (s == 0.0) return 1.0 / (1.0 - r);  // only reachable for r < 1
    double disc = s * s - 2.0 * s * (1.0 + r) + (1.0 - r) * (1.0 - r);
    double w = ((s + r - 1.0) + std::sqrt(disc)) / (2.0 * s * r);
    return -w;
  }
  if (const auto* sp = std::get_if<ScaledProjector>(&law.variant())) {
    double atom0 = (1.0 - 1.0 / sp->r);
    return (s == 0.0 ? 0.0 : -atom0 / s) + (1.0 / sp->r) / (sp->c - s);
  }
  const auto& eig = std::get<Empirical>(law.variant()).eigenvalues;
  double acc = 0.0;
  for (double e : eig) acc += 1.0 / (e - s);
  return acc / static_cast<double>(eig.size());
}

RTransform::RTransform(SpectralLaw law, RTransformOptions opts)
    : law_(std::move(law)), opts_(opts) {
  if (!(opts_.bracket_expansion > 1.0))
    throw ConfigError("RTransform: bracket_expansion must exceed 1");
}

double RTransform::invert_stieltjes(double w) const {
  // target: E[(t - s)^{-1}] = -w with -w > 0, unique root s < min eigenvalue
  double target = -w;
  double smin = law_.support_min();
  auto g = [&](double s) { return stieltjes(law_, s); };

  double gap = 1.0;
  double hi = smin - gap;
  int guard = 0;
  while (g(hi) < target) {
    gap /= opts_.bracket_expansion;
    hi = smin - gap;
    if (++guard > 4000) throw NumericError("r_transform: upper bracket collapse at w=" + std::to_string(w));
  }
  double width = gap;
  double lo = hi - width;
  guard = 0;
  while (g(lo) > target) {
    width *= opts_.bracket_expansion;
    lo = hi - width;
    if (++guard > 4000) throw NumericError("r_transform: lower bracket runaway at w=" + std::to_string(w));
  }
  return brent_root([&](double s) { return g(s) - target; }, lo, hi, opts_.root_tol);
}

double RTransform::value(double w) const {
  if (w > 0.0) throw DomainError("r_transform: defined for w <= 0 only");
  if (const auto* mp = std::get_if<MarchenkoPastur>(&law_.variant()))
    return 1.0 / (1.0 - mp->r * w);
  if (const auto* sp = std::get_if<ScaledProjector>(&law_.variant())) {
    if (sp->r == 1.0) return sp->c;  // point mass at c
    double wc = w * sp->c;
    double disc = (wc + 1.0) * (wc + 1.0) - 4.0 * wc * (1.0 - 1.0 / sp->r);
    return (2.0 * sp->c / sp->r) / (1.0 - wc + std::sqrt(disc));
  }
  if (w == 0.0) return law_.mean();
  return invert_stieltjes(w) - 1.0 / w;
}

double RTransform::derivative(double w) const {
  if (w > 0.0) throw DomainError("r_derivative: defined for w <= 0 only");
  if (const auto* mp = std::get_if<MarchenkoPastur>(&law_.variant())) {
    double d = 1.0 - mp->r * w;
    return mp->r / (d * d);
  }
  if (const auto* sp = std::get_if<ScaledProjector>(&law_.variant())) {
    if (sp->r == 1.0) return 0.0;
    double wc = w * sp->c;
    double disc = (wc + 1.0) * (wc + 1.0) - 4.0 * wc * (1.0 - 1.0 / sp->r);
    double sq = std::sqrt(disc);
    double den = 1.0 - wc + sq;
    double ddisc = 2.0 * sp->c * (wc + 1.0) - 4.0 * sp->c * (1.0 - 1.0 / sp->r);
    double dden = -sp->c + ddisc / (2.0 * sq);
    return -(2.0 * sp->c / sp->r) * dden / (den * den);
  }
  const auto& eig = std::get<Empirical>(law_.variant()).eigenvalues;
  double n = static_cast<double>(eig.size());
  if (w == 0.0) {
    double m = law_.mean(), s2 = 0.0;
    for (double e : eig) s2 += (e - m) * (e - m);
    return s2 / n;  // R'(0) = Var t
  }
  // exact inverse-function derivative: R'(w) = 1/w^2 - 1/E[(t-s)^{-2}],
  // rearranged as Var[(t-s)^{-1}] / (w^2 E[(t-s)^{-2}]) to avoid cancellation
  double s = invert_stieltjes(w);
  double m1 = 0.0, m2 = 0.0;
  for (double e : eig) {
    double u = 1.0 / (e - s);
    m1 += u;
    m2 += u * u;
  }
  m1 /= n;
  m2 /= n;
  double var = 0.0;
  for (double e : eig) {
    double d = 1.0 / (e - s) - m1;
    var += d * d;
  }
  var /= n;
  return var / (w * w * m2);
}

double RTransform::integral(double a, double b, double lambda) const {
  if (!(a >= 0.0 && b >= a)) throw DomainError("r_integral: need 0 <= a <= b");
  if (!(lambda > 0.0)) throw DomainError("r_integral: need lambda > 0");
  if (a == b) return 0.0;
  if (const auto* mp = std::get_if<MarchenkoPastur>(&law_.variant())) {
    // antiderivative of (1 + r w/lambda)^{-1} is (lambda/r) log(1 + r w/lambda)
    double r = mp->r;
    return (lambda / r) * (std::log1p(r * b / lambda) - std::log1p(r * a / lambda));
  }
  auto f = [&](double w) { return value(-w / lambda); };
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 12, 1e-12);
}

}  // namespace replica
