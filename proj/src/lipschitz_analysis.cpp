#include "svderiv/lipschitz_analysis.hpp"

#include <cmath>

#include "svderiv/rng.hpp"

namespace svderiv {

namespace {

std::vector<Vec> signed_axes(int dim) {
  std::vector<Vec> axes;
  for (int i = 0; i < dim; ++i) {
    axes.push_back(Vec::Unit(dim, i));
    axes.push_back(-Vec::Unit(dim, i));
  }
  return axes;
}

// Y(x, p) as a single point: the support oracle's maximizer, or the first
// maximizing vertex of a polytope value.
Vec exposed_point(const SetValuedMap& map, const Vec& x, const Vec& p) {
  if (map.kind() == MapKind::kSupportParametrized) return map.support_family().argmax(x, p);
  return map.eval(x).support_point(p);
}

// Whether the exposed face of F(center) in direction p is more than a point.
bool flat_face(const SetValuedMap& map, const Vec& center, const Vec& p) {
  const ConvexBody body = map.eval(center);
  if (body.is_polytope()) return argmax_face(body, p).vertices().size() > 1;
  const int dim = body.dim();
  if (dim == 1) return false;
  // Any unit vector orthogonal to p.
  int axis = 0;
  for (int i = 1; i < dim; ++i) {
    if (std::abs(p[i]) < std::abs(p[axis])) axis = i;
  }
  Vec t = Vec::Unit(dim, axis) - p[axis] * p;
  t.normalize();
  const Vec y = body.support_point(p);
  const Vec plus = body.support_point((p + 1e-6 * t).normalized());
  const Vec minus = body.support_point((p - 1e-6 * t).normalized());
  return (plus - minus).norm() > 1e-4 * (1.0 + y.norm());
}

}  // namespace

void RegionSpec::validate() const {
  if (center.size() == 0) throw LipschitzError("region: empty center");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw LipschitzError("region: radius must be positive");
  if (sample_count < 0) throw LipschitzError("region: negative sample count");
}

PointPair region_pair(const RegionSpec& region, int index) {
  Rng rng(stream_seed(region.seed, static_cast<std::uint64_t>(index)));
  const double sep = region.radius * std::pow(1e-4, rng.uniform());
  const Vec dir = rng.unit_vector(static_cast<int>(region.center.size()));
  const Vec mid = rng.in_ball(region.center, region.radius - 0.5 * sep);
  return {mid - 0.5 * sep * dir, mid + 0.5 * sep * dir};
}

LipschitzEstimate estimate_lipschitz(const SetValuedMap& map, const RegionSpec& region) {
  region.validate();
  LipschitzEstimate est;
  for (int i = 0; i < region.sample_count; ++i) {
    auto [x, xp] = region_pair(region, i);
    const ConvexBody a = map.eval(x);
    const ConvexBody b = map.eval(xp);
    const double h = std::max(one_sided_hausdorff(a, b), one_sided_hausdorff(b, a));
    const double ratio = h / (x - xp).norm();
    if (ratio > est.k || est.x.size() == 0) {
      est.k = ratio;
      est.x = std::move(x);
      est.x_prime = std::move(xp);
    }
  }
  return est;
}

LipschitzEstimate estimate_isotropic_lipschitz(const SetValuedMap& map, const RegionSpec& region,
                                               int direction_count) {
  region.validate();
  if (direction_count < 1) throw LipschitzError("direction_count must be at least 1");
  const int l = map.codomain_dim();
  std::vector<Vec> grid = signed_axes(l);
  if (l > 1) {
    for (auto& p : sphere_directions(l, direction_count)) grid.push_back(std::move(p));
  }

  LipschitzEstimate est;
  std::vector<Vec> dirs;
  for (const auto& p : grid) {
    if (flat_face(map, region.center, p)) {
      ++est.flat_directions;
    } else {
      dirs.push_back(p);
    }
  }
  if (dirs.empty()) throw LipschitzError("no grid direction exposes a single point: values are not strictly convex");

  auto consider = [&](const Vec& x, const Vec& xp, const std::vector<Vec>& y, const std::vector<Vec>& yp) {
    const double sep = (x - xp).norm();
    double worst = 0.0;
    for (std::size_t i = 0; i < dirs.size(); ++i) {
      const double ratio = (y[i] - yp[i]).norm() / sep;
      if (ratio > est.k || !est.direction) {
        est.k = ratio;
        est.x = x;
        est.x_prime = xp;
        est.direction = dirs[i];
      }
      worst = std::max(worst, ratio);
    }
    return worst;
  };
  auto exposed_all = [&](const Vec& x) {
    std::vector<Vec> ys;
    ys.reserve(dirs.size());
    for (const auto& p : dirs) ys.push_back(exposed_point(map, x, p));
    return ys;
  };

  const auto y_center = exposed_all(region.center);
  const int d = map.domain_dim();
  std::vector<double> shell_max;
  for (int j = 0; j < kShellCount; ++j) {
    const double s = region.radius * std::ldexp(1.0, -j);
    double worst = 0.0;
    for (const auto& e : signed_axes(d)) {
      const Vec x = region.center + s * e;
      worst = std::max(worst, consider(x, region.center, exposed_all(x), y_center));
    }
    shell_max.push_back(worst);
    est.shell_profile.emplace_back(s, worst);
  }
  for (int j = 3; j < kShellCount && !est.diverged; ++j) {
    bool growing = true;
    for (int m = j - 3; m < j; ++m) growing = growing && shell_max[m + 1] >= 1.05 * shell_max[m];
    est.diverged = growing && shell_max[j] > kDivergenceThreshold;
  }

  for (int i = 0; i < region.sample_count; ++i) {
    const auto [x, xp] = region_pair(region, i);
    consider(x, xp, exposed_all(x), exposed_all(xp));
  }
  return est;
}

CalmnessEstimate calmness_constant(const VecFn& f, const Vec& xbar, const RegionSpec& region) {
  region.validate();
  const int d = static_cast<int>(xbar.size());
  std::vector<Vec> dirs = signed_axes(d);
  if (d > 1) {
    for (int i = 0; i < region.sample_count; ++i) {
      Rng rng(stream_seed(region.seed, static_cast<std::uint64_t>(i)));
      dirs.push_back(rng.unit_vector(d));
    }
  }
  const Vec fbar = f(xbar);
  CalmnessEstimate est;
  for (int j = 0; j < kCalmnessShells; ++j) {
    const double s = region.radius * std::ldexp(1.0, -j);
    double worst = 0.0;
    for (const auto& e : dirs) worst = std::max(worst, (f(xbar + s * e) - fbar).norm() / s);
    est.profile.emplace_back(s, worst);
    est.k = std::max(est.k, worst);
  }
  return est;
}

IsotropicComparison isotropic_implies_lipschitz_report(const SetValuedMap& map, const RegionSpec& region,
                                                       int direction_count) {
  IsotropicComparison rep;
  rep.lipschitz = estimate_lipschitz(map, region);
  rep.isotropic = estimate_isotropic_lipschitz(map, region, direction_count);
  rep.pass = rep.isotropic.diverged || rep.lipschitz.k <= 1.05 * rep.isotropic.k;
  return rep;
}

}  // namespace svderiv
