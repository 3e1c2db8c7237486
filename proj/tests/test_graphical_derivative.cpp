#include <gtest/gtest.h>

#include <cmath>

#include "svderiv/graphical_derivative.hpp"

using namespace svderiv;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

const LimitSchedule kSchedule{};

SetValuedMap square_lift() {
  return singleton_lift([](const Vec& x) { return Vec(x.array().square()); }, 1, 1,
                        [](const Vec& x) { return Mat::Constant(1, 1, 2.0 * x[0]); });
}

SetValuedMap abs_lift() {
  return singleton_lift([](const Vec& x) { return Vec(x.cwiseAbs()); }, 1, 1);
}

SetValuedMap segment_map() {
  return generated_map({{[](const Vec& x) { return x; }, {}},
                        {[](const Vec& x) -> Vec { return x.array() + 1.0; }, {}}},
                       1, 1);
}

// Planar 3-generator map on R^2 used for the closed-form agreement checks.
SetValuedMap triangle_map() {
  return generated_map({{[](const Vec& x) { return v2(x[0], x[1]); }, {}},
                        {[](const Vec& x) { return v2(2.0 + x[1] * x[1], 0.5 * x[0]); }, {}},
                        {[](const Vec& x) { return v2(std::sin(x[0]), 2.0 + x[1]); }, {}}},
                       2, 2);
}

// Ball map with center (x1, 0.5 sin x2) and radius 1 + 0.3 x1^2 on R^2.
SetValuedMap moving_ball() {
  return ball_valued_map([](const Vec& x) { return v2(x[0], 0.5 * std::sin(x[1])); },
                         [](const Vec& x) { return 1.0 + 0.3 * x[0] * x[0]; }, 2, 2);
}

// Analytic d/dx sigma for moving_ball: J_c^T p + grad r |p|.
Vec moving_ball_gradient(const Vec& x, const Vec& p) {
  return v2(p[0] + 0.6 * x[0] * p.norm(), 0.5 * std::cos(x[1]) * p[1]);
}

// Tangent test for the unit square [0,1]^2, written from the coordinate bounds.
bool square_tangent(const Vec& y, const Vec& w, double tol) {
  for (int i = 0; i < 2; ++i) {
    if (y[i] <= 1e-12 && w[i] < -tol) return false;
    if (y[i] >= 1.0 - 1e-12 && w[i] > tol) return false;
  }
  return true;
}

}  // namespace

TEST(ResidualCurve, Examples) {
  const auto lift = square_lift();
  const GraphPoint gp{v1(1), v1(1)};
  const auto on = residual_curve(lift, gp, v1(1), v1(2), kSchedule);
  ASSERT_EQ(on.residuals.size(), 20u);
  for (const auto& [h, r] : on.residuals) EXPECT_NEAR(r, h, 1e-9);
  const auto off = residual_curve(lift, gp, v1(1), v1(3), kSchedule);
  for (const auto& [h, r] : off.residuals) EXPECT_NEAR(r, 1.0 - h, 1e-9);
  const auto zero = residual_curve(lift, gp, v1(0), v1(0), kSchedule);
  for (const auto& [h, r] : zero.residuals) EXPECT_EQ(r, 0.0);
  for (std::size_t k = 1; k < on.residuals.size(); ++k) EXPECT_LT(on.residuals[k].first, on.residuals[k - 1].first);
}

TEST(Schedule, Validation) {
  EXPECT_THROW((LimitSchedule{0.0, 0.5, 20}.validate()), DerivativeError);
  EXPECT_THROW((LimitSchedule{0.1, 1.0, 20}.validate()), DerivativeError);
  EXPECT_THROW((LimitSchedule{0.1, 0.5, 0}.validate()), DerivativeError);
  EXPECT_NEAR(kSchedule.step(19), 0.1 * std::pow(0.5, 19), 1e-20);
}

TEST(Membership, Examples) {
  const auto lift = square_lift();
  const GraphPoint gp{v1(1), v1(1)};
  EXPECT_TRUE(derivative_membership(lift, gp, v1(1), v1(2), kSchedule, 1e-4));
  EXPECT_FALSE(derivative_membership(lift, gp, v1(1), v1(3), kSchedule, 1e-4));
  EXPECT_EQ(membership(lift, gp, v1(1), v1(3), kSchedule, 1e-4), Membership::kNonMember);

  const auto seg = segment_map();
  const GraphPoint origin{v1(0), v1(0)};
  EXPECT_TRUE(derivative_membership(seg, origin, v1(1), v1(5), kSchedule, 1e-4));
  EXPECT_TRUE(derivative_membership(seg, origin, v1(1), v1(1), kSchedule, 1e-4));
  EXPECT_FALSE(derivative_membership(seg, origin, v1(1), v1(0.5), kSchedule, 1e-4));
}

TEST(Membership, BorderlineCurvesAreInconclusive) {
  const GraphPoint gp{v1(0), v1(0)};
  DerivativeProbe decaying{v1(1), v1(0), {}};
  DerivativeProbe growing{v1(1), v1(0), {}};
  for (int k = 0; k < 20; ++k) {
    const double h = kSchedule.step(k);
    decaying.residuals.emplace_back(h, 3e-4 + 10.0 * h);
    growing.residuals.emplace_back(h, 2e-6 * std::pow(h / 0.1, -0.3));
  }
  EXPECT_EQ(decide_membership(decaying, gp, 1e-4).verdict, Membership::kInconclusive);
  const auto d = decide_membership(growing, gp, 1e-4);
  EXPECT_LT(d.slope, 0.0);
  EXPECT_EQ(d.verdict, Membership::kInconclusive);
}

TEST(SampleDerivativeGraph, SingletonMatchesDerivative) {
  const auto f = [](const Vec& x) { return v2(std::sin(x[0]) * x[1], x[0] * x[0] - x[1]); };
  const auto lift = singleton_lift(f, 2, 2);
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const Vec x = v2(rng.uniform(-1, 1), rng.uniform(-1, 1));
    Mat jac(2, 2);
    jac << std::cos(x[0]) * x[1], std::sin(x[0]), 2.0 * x[0], -1.0;
    const auto pairs = sample_derivative_graph(lift, {x, f(x)}, 9, kSchedule, 1e-4, trial);
    EXPECT_EQ(pairs.size(), 9u);
    for (const auto& p : pairs) EXPECT_LE((p.v - jac * p.u).norm(), 1e-3);
  }
  EXPECT_TRUE(sample_derivative_graph(lift, {v2(0, 0), f(v2(0, 0))}, 0, kSchedule, 1e-4).empty());
}

TEST(SampleDerivativeGraph, ConstantBodyStaysTangent) {
  const auto body = ConvexBody::from_vertices({v2(0, 0), v2(1, 0), v2(1, 1), v2(0, 1)});
  const auto map = constant_map(body, 1);
  for (const Vec& y : {v2(0, 0), v2(0.5, 0), v2(1, 0.3), v2(0.4, 0.6)}) {
    const auto pairs = sample_derivative_graph(map, {v1(0.2), y}, 12, kSchedule, 1e-4, 7);
    EXPECT_FALSE(pairs.empty());
    for (const auto& p : pairs) EXPECT_TRUE(square_tangent(y, p.v, 1e-4)) << p.v.transpose();
  }
}

TEST(ClosedForm, SegmentExamples) {
  const auto seg = segment_map();
  const auto at_low = closed_form_derivative(seg, {v1(0), v1(0)});
  EXPECT_TRUE(at_low.contains(v1(1), v1(1), 1e-9));
  EXPECT_TRUE(at_low.contains(v1(1), v1(2), 1e-9));
  EXPECT_FALSE(at_low.contains(v1(1), v1(0.5), 1e-9));
  const auto mid = closed_form_derivative(seg, {v1(0), v1(0.5)});
  for (double v : {-5.0, 0.0, 3.0}) EXPECT_TRUE(mid.contains(v1(1), v1(v), 1e-9));
  const auto at_high = closed_form_derivative(seg, {v1(0), v1(1)});
  EXPECT_TRUE(at_high.contains(v1(1), v1(1), 1e-9));
  EXPECT_TRUE(at_high.contains(v1(1), v1(-4), 1e-9));
  EXPECT_FALSE(at_high.contains(v1(1), v1(1.5), 1e-9));
}

TEST(ClosedForm, Errors) {
  auto tri = generated_map({{[](const Vec& x) { return v2(x[0], 0); }, {}},
                            {[](const Vec& x) { return v2(0, x[0]); }, {}},
                            {[](const Vec&) { return v2(1, 1); }, {}}},
                           1, 2);
  EXPECT_THROW(closed_form_derivative(tri, {v1(2.0), v2(1, 1)}), IndependenceError);
  EXPECT_THROW(closed_form_derivative(segment_map(), {v1(0), v1(3)}), GeometryError);
  EXPECT_THROW(closed_form_derivative(counterexample_map(), {v1(0), v2(0, 1)}), DerivativeError);
}

TEST(ClosedForm, AgreesWithMembershipOnTriangle) {
  const auto map = triangle_map();
  Rng rng(11);
  int agree = 0, total = 0;
  for (int point = 0; point < 6; ++point) {
    const Vec x = v2(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
    const ConvexBody body = map.eval(x);
    const auto& verts = body.vertices();
    // vertex, edge and interior graph points in turn
    Vec lambda = Vec::Zero(3);
    if (point % 3 == 0) {
      lambda[point % 2] = 1.0;
    } else if (point % 3 == 1) {
      lambda[0] = 0.3;
      lambda[2] = 0.7;
    } else {
      lambda << 0.2, 0.3, 0.5;
    }
    const Vec y = lambda[0] * verts[0] + lambda[1] * verts[1] + lambda[2] * verts[2];
    const GraphPoint gp = make_graph_point(map, x, y);
    const auto cone = closed_form_derivative(map, gp);
    const Mat& lin = std::get<AffinePlusCone>(cone.rep).linear;
    for (int t = 0; t < 60; ++t) {
      const Vec u = rng.unit_vector(2);
      const Vec v = lin * u + v2(rng.normal(), rng.normal());
      agree += cone.contains(u, v, 1e-3) == derivative_membership(map, gp, u, v, kSchedule, 1e-3);
      ++total;
    }
  }
  EXPECT_GE(agree, 0.99 * total);
}

TEST(HalfSpace, BallExamples) {
  const auto translating = ball_valued_map([](const Vec& x) { return v2(x[0], 0); },
                                           [](const Vec&) { return 1.0; }, 1, 2);
  auto hs = halfspace_derivative(translating, {v1(0), v2(1, 0)});
  EXPECT_NEAR((hs.normal - v2(1, 0)).norm(), 0.0, 1e-9);
  EXPECT_NEAR(hs.gradient[0], 1.0, 1e-6);
  hs = halfspace_derivative(translating, {v1(0), v2(0, 1)});
  EXPECT_NEAR((hs.normal - v2(0, 1)).norm(), 0.0, 1e-9);
  EXPECT_NEAR(hs.gradient[0], 0.0, 1e-6);

  const auto growing = ball_valued_map([](const Vec&) { return v2(0, 0); },
                                       [](const Vec& x) { return 2.0 + std::sin(x[0]); }, 1, 2);
  hs = halfspace_derivative(growing, {v1(0), v2(2, 0)});
  EXPECT_NEAR((hs.normal - v2(1, 0)).norm(), 0.0, 1e-9);
  EXPECT_NEAR(hs.gradient[0], 1.0, 1e-6);

  EXPECT_THROW(halfspace_derivative(translating, {v1(0), v2(0.2, 0.1)}), DerivativeError);
  EXPECT_THROW(halfspace_derivative(segment_map(), {v1(0), v1(0)}), DerivativeError);
}

TEST(HalfSpace, InclusionsOnMovingBall) {
  const auto map = moving_ball();
  const auto& family = map.support_family();
  Rng rng(17);
  for (int point = 0; point < 4; ++point) {
    const Vec x = v2(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
    const Vec p = rng.unit_vector(2);
    const GraphPoint gp{x, family.argmax(x, p)};
    const auto hs = halfspace_derivative(map, gp);
    const Vec g = moving_ball_gradient(x, hs.normal);
    EXPECT_NEAR((hs.gradient - g).norm(), 0.0, 1e-6);
    EXPECT_NEAR((hs.normal - p).norm(), 0.0, 1e-6);

    // T inside C
    for (const auto& s : sample_derivative_graph(map, gp, 12, kSchedule, 1e-4, point)) {
      EXPECT_GE(g.dot(s.u) - hs.normal.dot(s.v), -1e-4);
    }
    // int C inside T
    int passed = 0;
    for (int t = 0; t < 10; ++t) {
      const Vec u = rng.unit_vector(2);
      Vec w = v2(rng.normal(), rng.normal());
      const double slack = g.dot(u) - hs.normal.dot(w);
      if (slack < 0.1) w += (0.1 - slack + 0.05) * hs.normal * -1.0;
      ASSERT_GE(g.dot(u) - hs.normal.dot(w), 0.1);
      passed += derivative_membership(map, gp, u, w, kSchedule, 1e-3);
    }
    EXPECT_EQ(passed, 10);
  }
}

TEST(VerifyConvexProcess, Examples) {
  Rng rng(5);
  std::vector<GraphPair> half;
  for (int i = 0; i < 20; ++i) {
    Vec u = v1(rng.normal());
    Vec w = v2(u[0] - std::abs(rng.normal()), rng.normal());
    half.push_back({u, w});
  }
  const MembershipFn in_half = [](const Vec& u, const Vec& w) { return u[0] >= w[0] - 1e-12; };
  EXPECT_TRUE(verify_convex_process(half, in_half, 100, 1).pass());

  const std::vector<GraphPair> kink{{v1(1), v1(1)}, {v1(-1), v1(1)}};
  const MembershipFn on_abs = [](const Vec& u, const Vec& v) { return std::abs(v[0] - std::abs(u[0])) < 1e-12; };
  const auto report = verify_convex_process(kink, on_abs, 10, 1);
  EXPECT_FALSE(report.pass());
  EXPECT_EQ(report.midpoint_failures, 10);
  EXPECT_EQ(report.failures.front().candidate.u[0], 0.0);
  EXPECT_EQ(report.failures.front().candidate.v[0], 1.0);

  const auto vacuous = verify_convex_process(kink, on_abs, 0);
  EXPECT_TRUE(vacuous.pass());
  EXPECT_FALSE(vacuous.warning.empty());
  EXPECT_THROW(verify_convex_process({}, on_abs, 3), DerivativeError);
}

TEST(Classifier, Examples) {
  const auto sq = classify_differentiability(square_lift(), {v1(1), v1(1)}, 12, kSchedule, 1e-4);
  ASSERT_EQ(sq.status, ClassifierVerdict::Status::kDifferentiable);
  ASSERT_TRUE(sq.cone);
  EXPECT_FALSE(sq.cone->is_empirical());
  EXPECT_TRUE(sq.cone->contains(v1(1), v1(2), 1e-6));
  EXPECT_FALSE(sq.cone->contains(v1(1), v1(2.1), 1e-6));

  const auto kink = classify_differentiability(abs_lift(), {v1(0), v1(0)}, 12, kSchedule, 1e-4);
  ASSERT_EQ(kink.status, ClassifierVerdict::Status::kNotDifferentiable);
  ASSERT_TRUE(kink.witness && kink.witness_probe);
  EXPECT_EQ(kink.witness->kind, FailedCheck::Kind::kMidpoint);
  EXPECT_LT(kink.witness->first.u[0] * kink.witness->second.u[0], 0.0);
  EXPECT_GT(kink.witness_probe->residuals.back().second, 1e-2);

  const auto seg = classify_differentiability(segment_map(), {v1(0), v1(0)}, 12, kSchedule, 1e-4);
  ASSERT_EQ(seg.status, ClassifierVerdict::Status::kDifferentiable);
  EXPECT_TRUE(seg.cone->contains(v1(1), v1(3), 1e-9));
  EXPECT_TRUE(seg.cone->contains(v1(-1), v1(-1), 1e-9));
  EXPECT_FALSE(seg.cone->contains(v1(1), v1(0), 1e-9));

  const auto ball = classify_differentiability(moving_ball(), {v2(0, 0), v2(0, 1)}, 12, kSchedule, 1e-4);
  ASSERT_EQ(ball.status, ClassifierVerdict::Status::kDifferentiable);
  EXPECT_TRUE(std::holds_alternative<HalfSpaceCone>(ball.cone->rep));
}

TEST(Classifier, SingleGeneratorMatchesLift) {
  const auto f = [](const Vec& x) { return v1(std::sin(3.0 * x[0]) + x[0] * x[0]); };
  const auto lift = singleton_lift(f, 1, 1);
  const auto gen = generated_map({{f, {}}}, 1, 1);
  Rng rng(19);
  for (int i = 0; i < 20; ++i) {
    const Vec x = v1(rng.uniform(-1, 1));
    const GraphPoint gp{x, f(x)};
    const auto a = classify_differentiability(lift, gp, 6, kSchedule, 1e-4, {8, static_cast<std::uint64_t>(i)});
    const auto b = classify_differentiability(gen, gp, 6, kSchedule, 1e-4, {8, static_cast<std::uint64_t>(i)});
    EXPECT_EQ(a.status, b.status);
    EXPECT_EQ(a.accepted_samples, b.accepted_samples);
    ASSERT_TRUE(a.cone && b.cone);
    EXPECT_EQ(std::get<AffinePlusCone>(a.cone->rep).linear, std::get<AffinePlusCone>(b.cone->rep).linear);
  }
}

TEST(Compatibility, Examples) {
  const auto sq = compatibility_check([](const Vec& x) { return Vec(x.array().square()); },
                                      [](const Vec& x) { return Mat::Constant(1, 1, 2.0 * x[0]); }, v1(1), 1,
                                      kSchedule, 1e-3);
  EXPECT_TRUE(sq.pass);
  EXPECT_LE(sq.membership_deviation, 1e-3);
  EXPECT_LE(sq.sampled_deviation, 1e-3);

  const auto lin = compatibility_check([](const Vec& x) { return Vec(3.0 * x); },
                                       [](const Vec&) { return Mat::Constant(1, 1, 3.0); }, v1(0), 1, kSchedule,
                                       1e-4);
  EXPECT_TRUE(lin.pass);
  EXPECT_LE(lin.membership_deviation, 1e-10);
  EXPECT_LE(lin.sampled_deviation, 1e-10);

  const auto circle = [](const Vec& x) { return v2(std::sin(x[0]), std::cos(x[0])); };
  const auto rep = compatibility_check(circle, {}, v1(0), 2, kSchedule, 1e-3);
  EXPECT_TRUE(rep.pass);
  const auto lift = singleton_lift(circle, 1, 2);
  EXPECT_TRUE(derivative_membership(lift, {v1(0), circle(v1(0))}, v1(1), v2(1, 0), kSchedule, 1e-3));
}

TEST(IntersectionWitness, Examples) {
  const auto seg = segment_map();
  const Vec v = intersection_witness(seg, {v1(0), v1(0)}, v1(1), 1.0, kSchedule, 1e-3);
  EXPECT_NEAR(v[0], 1.0, 1e-9);
  EXPECT_EQ(intersection_witness(seg, {v1(0), v1(0)}, v1(0), 1.0, kSchedule, 1e-3)[0], 0.0);
  EXPECT_THROW(intersection_witness(seg, {v1(0), v1(0)}, v1(1), 0.5, kSchedule, 1e-3), DerivativeError);

  const auto box = constant_map(ConvexBody::from_vertices({v2(0, 0), v2(1, 0), v2(0, 1)}), 2);
  const Vec w = intersection_witness(box, {v2(0.3, 0.3), v2(0.5, 0.5)}, v2(1, -2), 0.0, kSchedule, 1e-3);
  EXPECT_EQ(w.norm(), 0.0);
}

TEST(Invariants, MembershipIsConic) {
  // Members stay members under scaling by 0.5 and 2 at doubled tolerance.
  struct Case {
    SetValuedMap map;
    GraphPoint gp;
  };
  const auto ball = moving_ball();
  const std::vector<Case> cases{{square_lift(), {v1(0.3), v1(0.09)}},
                                {segment_map(), {v1(0.2), v1(0.2)}},
                                {triangle_map(), {v2(0.1, -0.2), triangle_map().eval(v2(0.1, -0.2)).vertices()[1]}},
                                {ball, {v2(0.2, 0.1), ball.support_family().argmax(v2(0.2, 0.1), v2(0.6, 0.8))}}};
  for (const auto& c : cases) {
    const auto pairs = sample_derivative_graph(c.map, c.gp, 9, kSchedule, 1e-4, 2);
    ASSERT_FALSE(pairs.empty());
    for (const auto& p : pairs) {
      for (double lambda : {0.5, 2.0}) {
        EXPECT_TRUE(derivative_membership(c.map, c.gp, lambda * p.u, lambda * p.v, kSchedule, 2e-4));
      }
    }
  }
}

TEST(Invariants, EmittedConesAreConvexProcesses) {
  const auto map = triangle_map();
  const Vec x = v2(0.2, 0.1);
  const ConvexBody body = map.eval(x);
    const auto& verts = body.vertices();
  std::vector<DerivativeCone> cones;
  for (const Vec& y : {verts[0], Vec(0.5 * (verts[1] + verts[2])), Vec((verts[0] + verts[1] + verts[2]) / 3.0)}) {
    cones.push_back(closed_form_derivative(map, {x, y}));
  }
  const auto ball = moving_ball();
  cones.push_back(DerivativeCone{halfspace_derivative(ball, {x, ball.support_family().argmax(x, v2(0, -1))})});
  Rng rng(29);
  for (const auto& cone : cones) {
    std::vector<GraphPair> samples;
    for (int i = 0; i < 30; ++i) samples.push_back(sample_cone(cone, 2, 2, rng));
    const MembershipFn in = [&](const Vec& u, const Vec& v) { return cone.contains(u, v, 1e-9); };
    EXPECT_TRUE(verify_convex_process(samples, in, 100, 3).pass());
  }
}
