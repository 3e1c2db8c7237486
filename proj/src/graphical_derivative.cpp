#include "svderiv/graphical_derivative.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace svderiv {

namespace {

Vec gaussian(Rng& rng, int n) {
  Vec g(n);
  for (int i = 0; i < n; ++i) g[i] = rng.normal();
  return g;
}

Vec stack(const Vec& u, const Vec& v) {
  Vec z(u.size() + v.size());
  z << u, v;
  return z;
}

Vec tail_mean(const std::vector<Vec>& iterates) {
  const std::size_t n = std::min<std::size_t>(kTailWindow, iterates.size());
  Vec mean = Vec::Zero(iterates.back().size());
  for (std::size_t i = iterates.size() - n; i < iterates.size(); ++i) mean += iterates[i];
  return mean / static_cast<double>(n);
}

// Rounding floor for dist(ybar + h v, .): distances below it carry no signal.
double distance_floor(const GraphPoint& gp) { return 1e-12 * (1.0 + gp.y.norm()); }

double least_squares_slope(const std::vector<std::pair<double, double>>& pts) {
  if (pts.size() < 2) return std::numeric_limits<double>::infinity();
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxy = 0.0, sxx = 0.0;
  for (const auto& [x, y] : pts) {
    sxy += (x - mx) * (y - my);
    sxx += (x - mx) * (x - mx);
  }
  return sxy / sxx;
}

Vec sample_in(const Cone& cone, int dim, Rng& rng) {
  if (const auto* poly = std::get_if<PolyhedralCone>(&cone)) {
    Vec c = Vec::Zero(dim);
    for (const auto& g : poly->generators) c += std::abs(rng.normal()) * g;
    return c;
  }
  const auto& hs = std::get<HalfSpaceCone>(cone);
  if (hs.domain_dim() != 0) throw DerivativeError("sample_cone: graph half-space used as a value cone");
  Vec w = gaussian(rng, dim);
  const double s = hs.normal.dot(w);
  if (s > 0.0) w -= 2.0 * s * hs.normal;
  return w;
}

}  // namespace

void LimitSchedule::validate() const {
  if (!(h0 > 0.0) || !std::isfinite(h0)) throw DerivativeError("schedule: h0 must be positive");
  if (!(gamma > 0.0 && gamma < 1.0)) throw DerivativeError("schedule: gamma must lie in (0, 1)");
  if (count < 1) throw DerivativeError("schedule: count must be at least 1");
}

double LimitSchedule::step(int k) const { return h0 * std::pow(gamma, k); }

const char* to_string(Membership m) {
  switch (m) {
    case Membership::kMember: return "member";
    case Membership::kNonMember: return "non-member";
    case Membership::kInconclusive: return "inconclusive";
  }
  return "?";
}

const char* to_string(FailedCheck::Kind kind) {
  switch (kind) {
    case FailedCheck::Kind::kOrigin: return "origin";
    case FailedCheck::Kind::kScaling: return "scaling";
    case FailedCheck::Kind::kMidpoint: return "midpoint";
  }
  return "?";
}

const char* to_string(ClassifierVerdict::Status status) {
  switch (status) {
    case ClassifierVerdict::Status::kDifferentiable: return "Differentiable";
    case ClassifierVerdict::Status::kNotDifferentiable: return "NotDifferentiable";
    case ClassifierVerdict::Status::kInconclusive: return "Inconclusive";
  }
  return "?";
}

DerivativeProbe residual_curve(const SetValuedMap& map, const GraphPoint& gp, const Vec& u, const Vec& v,
                               const LimitSchedule& schedule) {
  schedule.validate();
  if (u.size() != map.domain_dim() || v.size() != map.codomain_dim()) {
    throw DerivativeError("residual_curve: direction dimension mismatch");
  }
  DerivativeProbe probe{u, v, {}};
  probe.residuals.reserve(schedule.count);
  for (int k = 0; k < schedule.count; ++k) {
    const double h = schedule.step(k);
    const ConvexBody body = map.eval(gp.x + h * u);
    const double dist = distance_to_body(gp.y + h * v, body).distance;
    probe.residuals.emplace_back(h, dist / h);
  }
  return probe;
}

MembershipDecision decide_membership(const DerivativeProbe& probe, const GraphPoint& gp, double tol) {
  if (!(tol > 0.0)) throw DerivativeError("membership tolerance must be positive");
  const auto& res = probe.residuals;
  if (res.empty()) throw DerivativeError("empty residual curve");
  MembershipDecision d;
  const std::size_t tail = std::min<std::size_t>(kTailWindow, res.size());
  d.tail_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = res.size() - tail; i < res.size(); ++i) d.tail_min = std::min(d.tail_min, res[i].second);
  const double floor = distance_floor(gp);
  std::vector<std::pair<double, double>> logs;
  for (const auto& [h, r] : res) {
    d.max_residual = std::max(d.max_residual, r);
    if (r * h > floor) logs.emplace_back(std::log(h), std::log(r));
  }
  d.slope = least_squares_slope(logs);

  if (d.tail_min <= tol && (d.max_residual <= tol || d.slope >= 0.0)) {
    d.verdict = Membership::kMember;
  } else if (d.tail_min <= tol || (d.tail_min <= 10.0 * tol && d.slope > 0.0)) {
    d.verdict = Membership::kInconclusive;
  } else {
    d.verdict = Membership::kNonMember;
  }
  return d;
}

Membership membership(const SetValuedMap& map, const GraphPoint& gp, const Vec& u, const Vec& v,
                      const LimitSchedule& schedule, double tol) {
  return decide_membership(residual_curve(map, gp, u, v, schedule), gp, tol).verdict;
}

bool derivative_membership(const SetValuedMap& map, const GraphPoint& gp, const Vec& u, const Vec& v,
                           const LimitSchedule& schedule, double tol) {
  return membership(map, gp, u, v, schedule, tol) == Membership::kMember;
}

std::vector<GraphPair> sample_derivative_graph(const SetValuedMap& map, const GraphPoint& gp, int budget,
                                               const LimitSchedule& schedule, double tol, std::uint64_t seed) {
  schedule.validate();
  static constexpr double kScales[] = {0.5, 1.0, 2.0};
  std::vector<GraphPair> accepted;
  for (int i = 0; i < budget; ++i) {
    Rng rng(stream_seed(seed, static_cast<std::uint64_t>(i)));
    const Vec u = kScales[i % 3] * rng.unit_vector(map.domain_dim());
    Vec v = u.norm() * gaussian(rng, map.codomain_dim());
    try {
      std::vector<Vec> iterates;
      iterates.reserve(schedule.count);
      for (int k = 0; k < schedule.count; ++k) {
        const double h = schedule.step(k);
        const ConvexBody body = map.eval(gp.x + h * u);
        v = (distance_to_body(gp.y + h * v, body).nearest - gp.y) / h;
        iterates.push_back(v);
      }
      Vec candidate = tail_mean(iterates);
      if (membership(map, gp, u, candidate, schedule, tol) == Membership::kMember) {
        accepted.push_back({u, std::move(candidate)});
      }
    } catch (const std::runtime_error&) {
      // errors are data: the attempt is simply not accepted
    }
  }
  return accepted;
}

bool DerivativeCone::contains(const Vec& u, const Vec& v, double tol) const {
  const double scale = std::hypot(u.norm(), v.norm());
  if (scale == 0.0) return true;
  if (const auto* a = std::get_if<AffinePlusCone>(&rep)) {
    const Vec c = v - a->linear * u;
    const double cn = c.norm();
    if (cn == 0.0) return true;
    return cone_contains(a->cone, c, tol * scale / cn);
  }
  if (const auto* h = std::get_if<HalfSpaceCone>(&rep)) return cone_contains(*h, stack(u, v), tol);
  return cone_contains(std::get<EmpiricalCone>(rep).hull, stack(u, v), tol);
}

GraphPair sample_cone(const DerivativeCone& cone, int domain_dim, int codomain_dim, Rng& rng) {
  if (const auto* a = std::get_if<AffinePlusCone>(&cone.rep)) {
    Vec u = gaussian(rng, domain_dim);
    Vec v = a->linear * u + sample_in(a->cone, codomain_dim, rng);
    return {std::move(u), std::move(v)};
  }
  if (const auto* h = std::get_if<HalfSpaceCone>(&cone.rep)) {
    Vec z = gaussian(rng, domain_dim + codomain_dim);
    const Vec a = stack(-h->gradient, h->normal);
    const double s = a.dot(z);
    if (s > 0.0) z -= 2.0 * s / a.squaredNorm() * a;
    return {z.head(domain_dim), z.tail(codomain_dim)};
  }
  const Vec z = sample_in(std::get<EmpiricalCone>(cone.rep).hull, domain_dim + codomain_dim, rng);
  return {z.head(domain_dim), z.tail(codomain_dim)};
}

DerivativeCone closed_form_derivative(const SetValuedMap& map, const GraphPoint& gp) {
  if (map.kind() == MapKind::kSupportParametrized) {
    throw DerivativeError("closed_form_derivative: needs a generated or singleton map");
  }
  const ConvexBody body = map.eval(gp.x);
  const auto& pts = body.vertices();
  const int d = map.domain_dim(), l = map.codomain_dim();
  Mat linear = Mat::Zero(l, d);
  if (pts.size() <= static_cast<std::size_t>(l) + 1 && affinely_independent(pts)) {
    const Vec lambda = barycentric_coordinates(pts, gp.y).lambda;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (lambda[static_cast<int>(j)] != 0.0) linear += lambda[static_cast<int>(j)] * map.generator_jacobian(j, gp.x);
    }
  } else {
    // Without barycentric coordinates only a motionless body has a closed form.
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (!map.generator_jacobian(j, gp.x).isZero(0.0)) {
        throw DerivativeError("closed_form_derivative: generators are affinely dependent at xbar");
      }
    }
  }
  return DerivativeCone{AffinePlusCone{std::move(linear), tangent_cone(body, gp.y)}};
}

HalfSpaceCone halfspace_derivative(const SetValuedMap& map, const GraphPoint& gp, double fd_step) {
  if (map.kind() != MapKind::kSupportParametrized) {
    throw DerivativeError("halfspace_derivative: needs a support-parametrized map");
  }
  if (!(fd_step > 0.0)) throw DerivativeError("halfspace_derivative: step must be positive");
  const ConvexBody body = map.eval(gp.x);
  std::optional<Vec> normal;
  try {
    normal = normal_direction(body, gp.y);
  } catch (const GeometryError&) {
    throw DerivativeError("halfspace_derivative: ybar is not a boundary point");
  }
  if (!normal) throw DerivativeError("halfspace_derivative: ybar is a non-smooth boundary point");
  const auto& family = map.support_family();
  const int d = map.domain_dim();
  Vec g(d);
  for (int i = 0; i < d; ++i) {
    Vec xp = gp.x, xm = gp.x;
    xp[i] += fd_step;
    xm[i] -= fd_step;
    g[i] = (family.support(xp, *normal) - family.support(xm, *normal)) / (2.0 * fd_step);
  }
  return HalfSpaceCone{std::move(g), std::move(*normal)};
}

ConvexProcessReport verify_convex_process(const std::vector<GraphPair>& samples, const MembershipFn& membership,
                                          int trials, std::uint64_t seed) {
  ConvexProcessReport report;
  if (trials <= 0) {
    report.warning = "no trials requested; vacuous pass";
    return report;
  }
  if (samples.empty()) throw DerivativeError("verify_convex_process: no samples");
  const Vec zero_u = Vec::Zero(samples.front().u.size());
  const Vec zero_v = Vec::Zero(samples.front().v.size());
  if (!membership(zero_u, zero_v)) {
    report.origin_ok = false;
    report.failures.push_back({FailedCheck::Kind::kOrigin, {zero_u, zero_v}, {zero_u, zero_v}, {zero_u, zero_v}});
  }
  const auto n = static_cast<std::uint64_t>(samples.size());
  for (int t = 0; t < trials; ++t) {
    Rng rng(stream_seed(seed, static_cast<std::uint64_t>(t)));
    const auto& s = samples[rng.next_u64() % n];
    const double lambda = (t % 2 == 0) ? 0.5 : 2.0;
    GraphPair scaled{lambda * s.u, lambda * s.v};
    ++report.scaling_checks;
    if (!membership(scaled.u, scaled.v)) {
      ++report.scaling_failures;
      report.failures.push_back({FailedCheck::Kind::kScaling, s, s, std::move(scaled)});
    }

    const std::uint64_t i = rng.next_u64() % n;
    std::uint64_t j = rng.next_u64() % n;
    if (n > 1 && j == i) j = (j + 1) % n;
    const auto& a = samples[i];
    const auto& b = samples[j];
    GraphPair mid{0.5 * (a.u + b.u), 0.5 * (a.v + b.v)};
    ++report.midpoint_checks;
    if (!membership(mid.u, mid.v)) {
      ++report.midpoint_failures;
      report.failures.push_back({FailedCheck::Kind::kMidpoint, a, b, std::move(mid)});
    }
  }
  return report;
}

ClassifierVerdict classify_differentiability(const SetValuedMap& map, const GraphPoint& gp, int budget,
                                             const LimitSchedule& schedule, double tol,
                                             const ClassifierOptions& options) {
  ClassifierVerdict verdict;
  try {
    const auto samples = sample_derivative_graph(map, gp, budget, schedule, tol, options.seed);
    verdict.accepted_samples = static_cast<int>(samples.size());
    if (samples.empty()) {
      verdict.reason = "no accepted derivative samples";
      return verdict;
    }
    // Inconclusive probes are not counted as failures of the convex-process test.
    const MembershipFn member = [&](const Vec& u, const Vec& v) {
      return membership(map, gp, u, v, schedule, tol) != Membership::kNonMember;
    };
    verdict.report = verify_convex_process(samples, member, options.trials, options.seed);
    if (!verdict.report.pass()) {
      verdict.status = ClassifierVerdict::Status::kNotDifferentiable;
      const FailedCheck* pick = &verdict.report.failures.front();
      for (const auto& f : verdict.report.failures) {
        if (f.kind == FailedCheck::Kind::kMidpoint) {
          pick = &f;
          break;
        }
      }
      verdict.witness = *pick;
      verdict.witness_probe = residual_curve(map, gp, pick->candidate.u, pick->candidate.v, schedule);
      verdict.reason = std::string(to_string(pick->kind)) + " check failed";
      return verdict;
    }

    verdict.status = ClassifierVerdict::Status::kDifferentiable;
    auto empirical = [&] {
      PolyhedralCone hull{map.domain_dim() + map.codomain_dim(), {}};
      for (const auto& s : samples) hull.generators.push_back(stack(s.u, s.v));
      return DerivativeCone{EmpiricalCone{std::move(hull)}};
    };
    if (map.kind() != MapKind::kSupportParametrized) {
      try {
        verdict.cone = closed_form_derivative(map, gp);
      } catch (const std::runtime_error&) {
        verdict.cone = empirical();
      }
    } else {
      const ConvexBody body = map.eval(gp.x);
      std::optional<Vec> normal;
      bool interior = false;
      try {
        normal = normal_direction(body, gp.y);
      } catch (const GeometryError&) {
        interior = true;
      }
      if (interior) {
        verdict.cone = DerivativeCone{AffinePlusCone{Mat::Zero(map.codomain_dim(), map.domain_dim()),
                                                     PolyhedralCone::whole_space(map.codomain_dim())}};
      } else if (normal) {
        verdict.cone = DerivativeCone{halfspace_derivative(map, gp)};
      } else {
        verdict.cone = empirical();
      }
    }
    if (verdict.cone->is_empirical()) verdict.reason = "empirical cone";
  } catch (const std::runtime_error& e) {
    verdict = ClassifierVerdict{};
    verdict.reason = e.what();
  }
  return verdict;
}

CompatibilityReport compatibility_check(const VecFn& f, const JacobianFn& jacobian, const Vec& xbar, int codomain_dim,
                                        const LimitSchedule& schedule, double tol, int budget, std::uint64_t seed) {
  const int d = static_cast<int>(xbar.size());
  const auto lift = singleton_lift(f, d, codomain_dim, jacobian);
  const GraphPoint gp = make_graph_point(lift, xbar, f(xbar));
  const Mat jac = lift.generator_jacobian(0, xbar);

  CompatibilityReport report;
  bool all_members = true;
  std::vector<Vec> probes;
  for (int i = 0; i < d; ++i) {
    probes.push_back(Vec::Unit(d, i));
    probes.push_back(-Vec::Unit(d, i));
  }
  Rng rng(stream_seed(seed, 0xC0FFEE));
  for (int i = 0; i < 4; ++i) probes.push_back(rng.unit_vector(d));
  for (const auto& u : probes) {
    const auto probe = residual_curve(lift, gp, u, jac * u, schedule);
    const auto decision = decide_membership(probe, gp, tol);
    report.membership_deviation = std::max(report.membership_deviation, decision.tail_min);
    all_members = all_members && decision.verdict == Membership::kMember;
    ++report.probed;
  }

  const auto samples = sample_derivative_graph(lift, gp, budget, schedule, tol, seed);
  for (const auto& s : samples) {
    report.sampled_deviation = std::max(report.sampled_deviation, (s.v - jac * s.u).norm());
  }
  report.sampled = static_cast<int>(samples.size());
  report.pass = all_members && report.membership_deviation <= tol && report.sampled > 0 &&
                report.sampled_deviation <= tol;
  return report;
}

Vec intersection_witness(const SetValuedMap& map, const GraphPoint& gp, const Vec& u, double k,
                         const LimitSchedule& schedule, double tol) {
  schedule.validate();
  if (u.norm() == 0.0) return Vec::Zero(map.codomain_dim());
  std::vector<Vec> iterates;
  iterates.reserve(schedule.count);
  for (int i = 0; i < schedule.count; ++i) {
    const double h = schedule.step(i);
    const ConvexBody body = map.eval(gp.x + h * u);
    iterates.push_back((distance_to_body(gp.y, body).nearest - gp.y) / h);
  }
  Vec v = tail_mean(iterates);
  const double bound = k * u.norm() * (1.0 + tol);
  if (v.norm() > bound) {
    throw DerivativeError("intersection_witness: |v| = " + std::to_string(v.norm()) + " exceeds k|u| = " +
                          std::to_string(k * u.norm()) + "; k is below the local Lipschitz constant");
  }
  if (membership(map, gp, u, v, schedule, tol) != Membership::kMember) {
    throw DerivativeError("intersection_witness: the tail limit is not a derivative member");
  }
  return v;
}

}  // namespace svderiv
