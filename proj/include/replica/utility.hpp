#pragma once

#include <functional>
#include <variant>
#include <vector>

namespace replica {

/// u(v) = alpha * v^2 / 2
struct QuadraticUtility {
  double alpha;
};

/// u(v) = alpha * |v|
struct L1Utility {
  double alpha;
};

/// u(v) = alpha1 * |v| + alpha2 * v^2 / 2
struct ElasticNetUtility {
  double alpha1;
  double alpha2;
};

/// Finite support with per-atom costs; u is +inf off the support.
struct DiscreteSupportUtility {
  struct Atom {
    double value;
    double cost;  // >= 0
  };
  std::vector<Atom> atoms;
};

/// Pointwise evaluator with a search bracket for the scalar MAP problem.
struct CustomUtility {
  std::function<double(double)> u;
  double bracket_lo;
  double bracket_hi;
};

/// Separable non-negative penalty u. Immutable.
class Utility {
 public:
  using Variant = std::variant<QuadraticUtility, L1Utility, ElasticNetUtility,
                               DiscreteSupportUtility, CustomUtility>;

  static Utility quadratic(double alpha);
  static Utility l1(double alpha);
  static Utility elastic_net(double alpha1, double alpha2);
  static Utility discrete_support(std::vector<DiscreteSupportUtility::Atom> atoms);
  static Utility custom(std::function<double(double)> u, double bracket_lo,
                        double bracket_hi);
  /// u == 0 (identity estimator).
  static Utility zero() { return quadratic(0.0); }

  const Variant& variant() const { return v_; }
  /// u(v); +inf for off-support values of a discrete-support utility.
  double value(double v) const;
  bool is_convex() const;
  bool is_discrete_support() const;

 private:
  explicit Utility(Variant v);
  Variant v_;
};

/// Scalar MAP estimate argmin_v [ (y - v)^2 / (2 lambda_s) + u(v) ].
/// Closed form for quadratic / l1 / elastic-net / discrete support;
/// coarse-scan plus golden-section refinement within the bracket for custom
/// utilities. Ties break toward the value of smaller magnitude, then the
/// smaller value.
double scalar_map(double y, double lambda_s, const Utility& u);

}  // namespace replica
