#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "svderiv/convex_geometry.hpp"

namespace svderiv {

class MapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a generated map loses affine independence at an evaluated x.
class IndependenceError : public MapError {
 public:
  IndependenceError(const std::string& what, Vec at) : MapError(what), x(std::move(at)) {}
  Vec x;
};

using VecFn = std::function<Vec(const Vec&)>;
using ScalarFn = std::function<double(const Vec&)>;
/// Jacobian of R^d -> R^l as an l x d matrix.
using JacobianFn = std::function<Mat(const Vec&)>;
/// Gradient of R^d -> R.
using GradientFn = std::function<Vec(const Vec&)>;

struct Generator {
  VecFn f;
  JacobianFn jacobian;  // optional
};

enum class MapKind { kSingleton, kGenerated, kSupportParametrized };

const char* to_string(MapKind kind);

/// Step of the central differences used when no analytic Jacobian is given.
inline constexpr double kJacobianFdStep = 1e-6;

/// F : R^d ==> R^l with nonempty convex compact values. Immutable; copies
/// share the underlying (re-entrant) evaluators.
class SetValuedMap {
 public:
  struct SupportFamily {
    std::function<double(const Vec& x, const Vec& p)> support;
    std::function<Vec(const Vec& x, const Vec& p)> argmax;
  };

  int domain_dim() const { return d_; }
  int codomain_dim() const { return l_; }
  MapKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  std::optional<double> lipschitz_hint() const { return lipschitz_hint_; }
  bool requires_independence() const { return requires_independence_; }

  ConvexBody eval(const Vec& x) const;

  /// Generators of Singleton and Generated maps (empty otherwise).
  const std::vector<Generator>& generators() const { return generators_; }
  /// Analytic Jacobian of generator i when available, else central differences.
  Mat generator_jacobian(std::size_t i, const Vec& x) const;

  /// Support function and exposed point in x, for SupportParametrized maps.
  const SupportFamily& support_family() const;

  SetValuedMap with_lipschitz_hint(double k) const;
  SetValuedMap with_name(std::string name) const;

 private:
  friend SetValuedMap singleton_lift(VecFn, int, int, JacobianFn);
  friend SetValuedMap generated_map(std::vector<Generator>, int, int);
  friend SetValuedMap counterexample_map();
  friend SetValuedMap ball_valued_map(VecFn, ScalarFn, int, int);
  friend SetValuedMap constant_map(ConvexBody, int);
  static SetValuedMap make_support_map(int d, int l, std::string name, SupportFamily family,
                                       std::function<ConvexBody(const Vec&)> body_fn);
  friend SetValuedMap support_parametrized_map(SupportFamily, int, int, std::string);

  int d_ = 0;
  int l_ = 0;
  MapKind kind_ = MapKind::kSingleton;
  std::string name_;
  std::optional<double> lipschitz_hint_;
  bool requires_independence_ = false;
  std::vector<Generator> generators_;
  std::shared_ptr<const SupportFamily> family_;
  std::shared_ptr<const std::function<ConvexBody(const Vec&)>> body_fn_;
};

/// (xbar, ybar) with dist(ybar, F(xbar)) <= 1e-8 (1 + |ybar|).
struct GraphPoint {
  Vec x;
  Vec y;
};

GraphPoint make_graph_point(const SetValuedMap& map, Vec x, Vec y);

SetValuedMap singleton_lift(VecFn f, int d, int l, JacobianFn jacobian = {});

/// F(x) = conv{f_1(x), ..., f_N(x)} with the affine-independence requirement
/// checked at each evaluation. Throws MapError when N > l + 1.
SetValuedMap generated_map(std::vector<Generator> generators, int d, int l);

/// The piecewise functions of the truncated-epigraph counterexample:
///   tau = 0: x^2 - x (x <= 0), x^2 (x > 0);
///   tau > 0: x^2 - x + tau (x <= 0), -x sqrt(tau) + tau (0 <= x <= sqrt(tau)),
///            x^2 - tau (x > sqrt(tau)).
/// Throws MapError for tau < 0.
double phi_tau(double tau, double x);

/// F(tau) = epi phi_|tau| intersected with R x [-2, 2] on tau in [-1, 1]: a
/// Lipschitz map whose exposed point in direction (0, -1) is (sqrt|tau|, 0).
SetValuedMap counterexample_map();

/// Direction in which the counterexample's exposed point is (sqrt|tau|, 0).
Vec counterexample_direction();

/// F(x) = center(x) + radius(x) B.
SetValuedMap ball_valued_map(VecFn center, ScalarFn radius, int d, int l);

/// F(x) = K for all x in R^d. Polytopes are Generated (no independence
/// requirement), oracle bodies are SupportParametrized.
SetValuedMap constant_map(ConvexBody body, int d);

SetValuedMap support_parametrized_map(SetValuedMap::SupportFamily family, int d, int l,
                                      std::string name);

}  // namespace svderiv
