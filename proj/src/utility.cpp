#include "replica/utility.hpp"

#include <cmath>
#include <limits>

#include "replica/errors.hpp"
#include "replica/numeric.hpp"

namespace replica {

Utility::Utility(Variant v) : v_(std::move(v)) {}

Utility Utility::quadratic(double alpha) {
  if (alpha < 0.0) throw ConfigError("Utility::quadratic: alpha must be >= 0");
  return Utility(QuadraticUtility{alpha});
}

Utility Utility::l1(double alpha) {
  if (alpha < 0.0) throw ConfigError("Utility::l1: alpha must be >= 0");
  return Utility(L1Utility{alpha});
}

Utility Utility::elastic_net(double alpha1, double alpha2) {
  if (alpha1 < 0.0 || alpha2 < 0.0) throw ConfigError("Utility::elastic_net: alphas must be >= 0");
  return Utility(ElasticNetUtility{alpha1, alpha2});
}

Utility Utility::discrete_support(std::vector<DiscreteSupportUtility::Atom> atoms) {
  if (atoms.empty()) throw ConfigError("Utility::discrete_support: empty support");
  for (const auto& a : atoms)
    if (a.cost < 0.0) throw ConfigError("Utility::discrete_support: negative cost");
  return Utility(DiscreteSupportUtility{std::move(atoms)});
}

Utility Utility::custom(std::function<double(double)> u, double lo, double hi) {
  if (!u) throw ConfigError("Utility::custom: missing evaluator");
  if (!(lo < hi)) throw ConfigError("Utility::custom: invalid search bracket");
  return Utility(CustomUtility{std::move(u), lo, hi});
}

double Utility::value(double v) const {
  return std::visit(
      [v](const auto& u) -> double {
        using T = std::decay_t<decltype(u)>;
        if constexpr (std::is_same_v<T, QuadraticUtility>) {
          return 0.5 * u.alpha * v * v;
        } else if constexpr (std::is_same_v<T, L1Utility>) {
          return u.alpha * std::abs(v);
        } else if constexpr (std::is_same_v<T, ElasticNetUtility>) {
          return u.alpha1 * std::abs(v) + 0.5 * u.alpha2 * v * v;
        } else if constexpr (std::is_same_v<T, DiscreteSupportUtility>) {
          for (const auto& a : u.atoms)
            if (v == a.value) return a.cost;
          return std::numeric_limits<double>::infinity();
        } else {
          return u.u(v);
        }
      },
      v_);
}

bool Utility::is_convex() const {
  return std::holds_alternative<QuadraticUtility>(v_) ||
         std::holds_alternative<L1Utility>(v_) ||
         std::holds_alternative<ElasticNetUtility>(v_);
}

bool Utility::is_discrete_support() const {
  return std::holds_alternative<DiscreteSupportUtility>(v_);
}

namespace {

inline double soft_threshold(double y, double t) {
  double m = std::abs(y) - t;
  return m > 0.0 ? std::copysign(m, y) : 0.0;
}

// (candidate) beats (incumbent) under the deterministic tie rule
bool beats(double cand_obj, double cand_v, double best_obj, double best_v) {
  if (cand_obj < best_obj) return true;
  if (cand_obj > best_obj) return false;
  double ca = std::abs(cand_v), ba = std::abs(best_v);
  if (ca != ba) return ca < ba;
  return cand_v < best_v;
}

}  // namespace

double scalar_map(double y, double lambda_s, const Utility& u) {
  if (!(lambda_s > 0.0)) throw DomainError("scalar_map: lambda_s must be positive");
  return std::visit(
      [&](const auto& uu) -> double {
        using T = std::decay_t<decltype(uu)>;
        if constexpr (std::is_same_v<T, QuadraticUtility>) {
          return y / (1.0 + uu.alpha * lambda_s);
        } else if constexpr (std::is_same_v<T, L1Utility>) {
          return soft_threshold(y, uu.alpha * lambda_s);
        } else if constexpr (std::is_same_v<T, ElasticNetUtility>) {
          return soft_threshold(y, uu.alpha1 * lambda_s) / (1.0 + uu.alpha2 * lambda_s);
        } else if constexpr (std::is_same_v<T, DiscreteSupportUtility>) {
          double best_v = 0.0, best_obj = std::numeric_limits<double>::infinity();
          bool first = true;
          for (const auto& a : uu.atoms) {
            double d = y - a.value;
            double obj = 0.5 * d * d / lambda_s + a.cost;
            if (first || beats(obj, a.value, best_obj, best_v)) {
              best_obj = obj;
              best_v = a.value;
              first = false;
            }
          }
          return best_v;
        } else {
          // coarse scan then golden-section refinement around the best cell;
          // robust to mild non-convexity inside the bracket
          auto obj = [&](double v) {
            double d = y - v;
            return 0.5 * d * d / lambda_s + uu.u(v);
          };
          const int kCells = 96;
          double lo = uu.bracket_lo, hi = uu.bracket_hi;
          double h = (hi - lo) / kCells;
          double best_v = lo, best_obj = obj(lo);
          for (int i = 1; i <= kCells; ++i) {
            double v = lo + i * h;
            double o = obj(v);
            if (beats(o, v, best_obj, best_v)) {
              best_obj = o;
              best_v = v;
            }
          }
          double a = std::max(lo, best_v - h), b = std::min(hi, best_v + h);
          double g = golden_section_min(obj, a, b, 1e-12 * std::max(1.0, hi - lo));
          return beats(obj(g), g, best_obj, best_v) ? g : best_v;
        }
      },
      u.variant());
}

}  // namespace replica
