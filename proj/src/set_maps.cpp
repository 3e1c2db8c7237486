#include "svderiv/set_maps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace svderiv {

namespace {

std::string format_vec(const Vec& v) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ')';
  return os.str();
}

void check_point(const Vec& x, int d, const std::string& name) {
  if (x.size() != d) {
    throw MapError(name + ": expected a point of dimension " + std::to_string(d) + ", got " +
                   std::to_string(x.size()));
  }
}

// ---------------------------------------------------------------------------
// Truncated epigraph of phi_tau, cut at height 2.

constexpr double kCap = 2.0;

class TruncatedEpigraph {
 public:
  // The cap endpoints solve phi = 2 on the outer quadratic pieces.
  explicit TruncatedEpigraph(double tau)
      : tau_(tau), left_((1.0 - std::sqrt(9.0 - 4.0 * tau)) / 2.0), right_(std::sqrt(kCap + tau)) {}

  double phi(double x) const { return phi_tau(tau_, x); }

  Vec argmax(const Vec& p) const {
    Vec y(2);
    if (p[1] > 0.0) {
      // The cap dominates; its endpoints are the extreme x.
      y << (p[0] > 0.0 ? right_ : (p[0] < 0.0 ? left_ : 0.5 * (left_ + right_))), kCap;
      return y;
    }
    if (p[1] == 0.0) {
      y << (p[0] >= 0.0 ? right_ : left_), kCap;
      return y;
    }
    const double x = maximize_on_curve(p);
    y << x, phi(x);
    return y;
  }

  double support(const Vec& p) const {
    if (p.squaredNorm() == 0.0) return 0.0;
    return p.dot(argmax(p));
  }

 private:
  // max_x p1 x + p2 phi(x) over [left, right] for p2 < 0. The objective is
  // concave and piecewise smooth, so the maximum sits at a breakpoint or at
  // the clamped stationary point of one of the quadratic pieces.
  double maximize_on_curve(const Vec& p) const {
    const double q = p[0] / -p[1];
    const double knot = std::sqrt(tau_);
    const double candidates[] = {left_,
                                 right_,
                                 0.0,
                                 knot,
                                 std::clamp(0.5 * (q + 1.0), left_, 0.0),
                                 std::clamp(0.5 * q, knot, right_)};
    double best_x = left_;
    double best_val = -std::numeric_limits<double>::infinity();
    for (double x : candidates) {
      const double v = q * x - phi(x);
      if (v > best_val) {
        best_val = v;
        best_x = x;
      }
    }
    return best_x;
  }

  double tau_;
  double left_;
  double right_;
};

}  // namespace

const char* to_string(MapKind kind) {
  switch (kind) {
    case MapKind::kSingleton: return "singleton";
    case MapKind::kGenerated: return "generated";
    case MapKind::kSupportParametrized: return "support";
  }
  return "?";
}

ConvexBody SetValuedMap::eval(const Vec& x) const {
  check_point(x, d_, name_);
  if (kind_ == MapKind::kSupportParametrized) return (*body_fn_)(x);

  std::vector<Vec> verts;
  verts.reserve(generators_.size());
  for (const auto& g : generators_) {
    Vec y = g.f(x);
    if (y.size() != l_) throw MapError(name_ + ": generator returned a vector of wrong dimension");
    if (!y.allFinite()) throw MapError(name_ + ": non-finite value at x = " + format_vec(x));
    verts.push_back(std::move(y));
  }
  if (requires_independence_ && verts.size() > 1 && !affinely_independent(verts)) {
    throw IndependenceError(name_ + ": generators are affinely dependent at x = " + format_vec(x), x);
  }
  return ConvexBody::from_vertices(std::move(verts));
}

Mat SetValuedMap::generator_jacobian(std::size_t i, const Vec& x) const {
  if (i >= generators_.size()) throw MapError(name_ + ": generator index out of range");
  check_point(x, d_, name_);
  const auto& g = generators_[i];
  if (g.jacobian) return g.jacobian(x);
  Mat jac(l_, d_);
  for (int k = 0; k < d_; ++k) {
    Vec xp = x, xm = x;
    xp[k] += kJacobianFdStep;
    xm[k] -= kJacobianFdStep;
    jac.col(k) = (g.f(xp) - g.f(xm)) / (2.0 * kJacobianFdStep);
  }
  return jac;
}

const SetValuedMap::SupportFamily& SetValuedMap::support_family() const {
  if (!family_) throw MapError(name_ + ": not a support-parametrized map");
  return *family_;
}

SetValuedMap SetValuedMap::with_lipschitz_hint(double k) const {
  SetValuedMap m = *this;
  m.lipschitz_hint_ = k;
  return m;
}

SetValuedMap SetValuedMap::with_name(std::string name) const {
  SetValuedMap m = *this;
  m.name_ = std::move(name);
  return m;
}

SetValuedMap SetValuedMap::make_support_map(int d, int l, std::string name, SupportFamily family,
                                            std::function<ConvexBody(const Vec&)> body_fn) {
  SetValuedMap m;
  m.d_ = d;
  m.l_ = l;
  m.kind_ = MapKind::kSupportParametrized;
  m.name_ = std::move(name);
  m.family_ = std::make_shared<const SupportFamily>(std::move(family));
  m.body_fn_ = std::make_shared<const std::function<ConvexBody(const Vec&)>>(std::move(body_fn));
  return m;
}

GraphPoint make_graph_point(const SetValuedMap& map, Vec x, Vec y) {
  if (y.size() != map.codomain_dim()) throw MapError("graph point: codomain dimension mismatch");
  const double dist = distance_to_body(y, map.eval(x)).distance;
  if (dist > 1e-8 * (1.0 + y.norm())) {
    throw MapError("graph point: y is not in F(x) (distance " + std::to_string(dist) + ")");
  }
  return {std::move(x), std::move(y)};
}

SetValuedMap singleton_lift(VecFn f, int d, int l, JacobianFn jacobian) {
  if (d < 1 || l < 1) throw MapError("singleton_lift: dimensions must be positive");
  SetValuedMap m;
  m.d_ = d;
  m.l_ = l;
  m.kind_ = MapKind::kSingleton;
  m.name_ = "singleton";
  m.generators_.push_back({std::move(f), std::move(jacobian)});
  return m;
}

SetValuedMap generated_map(std::vector<Generator> generators, int d, int l) {
  if (d < 1 || l < 1) throw MapError("generated_map: dimensions must be positive");
  if (generators.empty()) throw MapError("generated_map: at least one generator is required");
  if (static_cast<int>(generators.size()) > l + 1) {
    throw MapError("generated_map: affine independence impossible with " +
                   std::to_string(generators.size()) + " generators in R^" + std::to_string(l));
  }
  SetValuedMap m;
  m.d_ = d;
  m.l_ = l;
  m.kind_ = MapKind::kGenerated;
  m.name_ = "generated";
  m.requires_independence_ = true;
  m.generators_ = std::move(generators);
  return m;
}

double phi_tau(double tau, double x) {
  if (tau < 0.0 || !std::isfinite(tau)) throw MapError("phi_tau: tau must be nonnegative");
  if (tau == 0.0) return x <= 0.0 ? x * x - x : x * x;
  const double s = std::sqrt(tau);
  if (x <= 0.0) return x * x - x + tau;
  // Both closing branches give 0 at x = sqrt(tau).
  if (x <= s) return -x * s + tau;
  return x * x - tau;
}

Vec counterexample_direction() {
  Vec p(2);
  p << 0.0, -1.0;
  return p;
}

SetValuedMap counterexample_map() {
  auto body_at = [](double tau) {
    if (!(std::abs(tau) <= 1.0)) throw MapError("counterexample: tau must lie in [-1, 1]");
    return std::make_shared<const TruncatedEpigraph>(std::abs(tau));
  };
  SetValuedMap::SupportFamily family;
  family.support = [body_at](const Vec& x, const Vec& p) { return body_at(x[0])->support(p); };
  family.argmax = [body_at](const Vec& x, const Vec& p) { return body_at(x[0])->argmax(p); };
  auto body_fn = [body_at](const Vec& x) {
    auto epi = body_at(x[0]);
    SupportOracle o;
    o.support = [epi](const Vec& p) { return epi->support(p); };
    o.argmax = [epi](const Vec& p) { return epi->argmax(p); };
    return ConvexBody::from_oracle(2, std::move(o));
  };
  return SetValuedMap::make_support_map(1, 2, "truncated_epigraph", std::move(family), std::move(body_fn));
}

SetValuedMap ball_valued_map(VecFn center, ScalarFn radius, int d, int l) {
  if (d < 1 || l < 1) throw MapError("ball_valued_map: dimensions must be positive");
  auto c = std::make_shared<const VecFn>(std::move(center));
  auto r = std::make_shared<const ScalarFn>(std::move(radius));
  auto checked_radius = [r](const Vec& x) {
    const double rad = (*r)(x);
    if (!(rad > 0.0) || !std::isfinite(rad)) {
      throw MapError("ball_valued_map: radius must be positive, got " + std::to_string(rad));
    }
    return rad;
  };
  SetValuedMap::SupportFamily family;
  family.support = [c, checked_radius](const Vec& x, const Vec& p) {
    return p.dot((*c)(x)) + checked_radius(x) * p.norm();
  };
  family.argmax = [c, checked_radius](const Vec& x, const Vec& p) -> Vec {
    return (*c)(x) + checked_radius(x) * p / p.norm();
  };
  auto body_fn = [c, checked_radius, l](const Vec& x) {
    const Vec cx = (*c)(x);
    if (cx.size() != l) throw MapError("ball_valued_map: center has wrong dimension");
    const double rad = checked_radius(x);
    SupportOracle o;
    o.support = [cx, rad](const Vec& p) { return p.dot(cx) + rad * p.norm(); };
    o.argmax = [cx, rad](const Vec& p) -> Vec { return cx + rad * p / p.norm(); };
    return ConvexBody::from_oracle(l, std::move(o));
  };
  return SetValuedMap::make_support_map(d, l, "ball", std::move(family), std::move(body_fn));
}

SetValuedMap constant_map(ConvexBody body, int d) {
  if (d < 1) throw MapError("constant_map: domain dimension must be positive");
  const int l = body.dim();
  if (body.is_polytope()) {
    SetValuedMap m;
    m.d_ = d;
    m.l_ = l;
    m.kind_ = MapKind::kGenerated;
    m.name_ = "constant";
    m.lipschitz_hint_ = 0.0;
    for (const auto& v : body.vertices()) {
      m.generators_.push_back({[v](const Vec&) { return v; },
                               [l, d](const Vec&) -> Mat { return Mat::Zero(l, d); }});
    }
    return m;
  }
  auto shared = std::make_shared<const ConvexBody>(std::move(body));
  SetValuedMap::SupportFamily family;
  family.support = [shared](const Vec&, const Vec& p) { return support_value(*shared, p); };
  family.argmax = [shared](const Vec&, const Vec& p) { return shared->support_point(p); };
  return SetValuedMap::make_support_map(d, l, "constant", std::move(family),
                                        [shared](const Vec&) { return *shared; })
      .with_lipschitz_hint(0.0);
}

SetValuedMap support_parametrized_map(SetValuedMap::SupportFamily family, int d, int l,
                                      std::string name) {
  if (!family.support || !family.argmax) throw MapError("support_parametrized_map: incomplete family");
  auto fam = std::make_shared<const SetValuedMap::SupportFamily>(family);
  auto body_fn = [fam, l](const Vec& x) {
    SupportOracle o;
    o.support = [fam, x](const Vec& p) { return fam->support(x, p); };
    o.argmax = [fam, x](const Vec& p) { return fam->argmax(x, p); };
    return ConvexBody::from_oracle(l, std::move(o));
  };
  return SetValuedMap::make_support_map(d, l, std::move(name), std::move(family), std::move(body_fn));
}

}  // namespace svderiv
