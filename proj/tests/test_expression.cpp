#include <gtest/gtest.h>

#include <cmath>

#include "svderiv/expression.hpp"
#include "svderiv/map_config.hpp"
#include "svderiv/rng.hpp"

using namespace svderiv;

namespace {
Eigen::VectorXd at(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}
}  // namespace

TEST(Expression, Arithmetic) {
  EXPECT_DOUBLE_EQ(Expression::parse("1 + 2*3", 0).eval(at({})), 7.0);
  EXPECT_DOUBLE_EQ(Expression::parse("(1 + 2)*3", 0).eval(at({})), 9.0);
  EXPECT_DOUBLE_EQ(Expression::parse("2^3^2", 0).eval(at({})), 512.0);
  EXPECT_DOUBLE_EQ(Expression::parse("-x1^2", 1).eval(at({3})), -9.0);
  EXPECT_DOUBLE_EQ(Expression::parse("2^-1", 0).eval(at({})), 0.5);
  EXPECT_DOUBLE_EQ(Expression::parse("8/4/2", 0).eval(at({})), 1.0);
  EXPECT_DOUBLE_EQ(Expression::parse("x1 - x2 - 1", 2).eval(at({5, 2})), 2.0);
  EXPECT_DOUBLE_EQ(Expression::parse("1.5e1", 0).eval(at({})), 15.0);
  EXPECT_DOUBLE_EQ(Expression::parse("abs(x1) + sqrt(x2)", 2).eval(at({-2, 9})), 5.0);
  EXPECT_NEAR(Expression::parse("sin(x1)^2 + cos(x1)^2", 1).eval(at({0.7})), 1.0, 1e-15);
  EXPECT_NEAR(Expression::parse("exp(x1)", 1).eval(at({1})), std::exp(1.0), 1e-15);
}

TEST(Expression, Errors) {
  EXPECT_THROW(Expression::parse("x3", 2), ExpressionError);
  EXPECT_THROW(Expression::parse("x0", 2), ExpressionError);
  EXPECT_THROW(Expression::parse("x", 1), ExpressionError);
  EXPECT_THROW(Expression::parse("log(x1)", 1), ExpressionError);
  EXPECT_THROW(Expression::parse("(x1", 1), ExpressionError);
  EXPECT_THROW(Expression::parse("x1 +", 1), ExpressionError);
  EXPECT_THROW(Expression::parse("x1 x1", 1), ExpressionError);
  EXPECT_THROW(Expression::parse("", 1), ExpressionError);
}

TEST(Expression, GradientMatchesCentralDifferences) {
  const char* exprs[] = {"x1^2*x2 - 3*x1", "sin(x1*x2) + exp(-x2)", "sqrt(1 + x1^2) / (2 + cos(x2))",
                         "abs(x1 - 5) + x2^3", "(x1+2)^(x2+2)"};
  Rng rng(21);
  for (const char* text : exprs) {
    const auto e = Expression::parse(text, 2);
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::VectorXd x = at({rng.uniform(0.1, 1.5), rng.uniform(-1, 1)});
      const auto [v, g] = e.eval_with_gradient(x);
      EXPECT_DOUBLE_EQ(v, e.eval(x));
      for (int k = 0; k < 2; ++k) {
        Eigen::VectorXd xp = x, xm = x;
        xp[k] += 1e-6;
        xm[k] -= 1e-6;
        const double fd = (e.eval(xp) - e.eval(xm)) / 2e-6;
        EXPECT_NEAR(g[k], fd, 1e-6 * (1 + std::abs(fd))) << text;
      }
    }
  }
}

TEST(MapConfig, BuildsEachKind) {
  using nlohmann::json;
  auto seg = map_from_json(json::parse(R"J({"kind":"generated","d":1,"l":1,"functions":["x1","x1+1"]})J"));
  EXPECT_EQ(seg.kind(), MapKind::kGenerated);
  const auto body = seg.eval(at({0.5}));
  ASSERT_EQ(body.vertices().size(), 2u);
  EXPECT_DOUBLE_EQ(body.vertices()[1][0], 1.5);
  EXPECT_DOUBLE_EQ(seg.generator_jacobian(1, at({0.5}))(0, 0), 1.0);

  auto circle = map_from_json(json::parse(R"J({"kind":"singleton","d":1,"l":2,"functions":[["sin(x1)","cos(x1)"]]})J"));
  EXPECT_EQ(circle.kind(), MapKind::kSingleton);
  EXPECT_NEAR(circle.eval(at({0})).vertices()[0][1], 1.0, 1e-15);
  EXPECT_NEAR(circle.generator_jacobian(0, at({0}))(0, 0), 1.0, 1e-15);

  auto ball = map_from_json(json::parse(R"J({"kind":"ball","d":1,"l":2,"functions":[["x1","0"],"2+sin(x1)"],"lipschitz":2})J"));
  EXPECT_EQ(ball.kind(), MapKind::kSupportParametrized);
  EXPECT_NEAR(support_value(ball.eval(at({0})), at({1, 0})), 2.0, 1e-15);
  EXPECT_EQ(ball.lipschitz_hint().value(), 2.0);

  auto ex = map_from_json(json::parse(R"J({"kind":"truncated_epigraph"})J"));
  EXPECT_EQ(ex.domain_dim(), 1);
  EXPECT_EQ(ex.codomain_dim(), 2);
}

TEST(MapConfig, RejectsMalformedDocuments) {
  using nlohmann::json;
  EXPECT_THROW(map_from_json(json::parse(R"J({"kind":"blob","d":1,"l":1,"functions":[]})J")), ConfigError);
  EXPECT_THROW(map_from_json(json::parse(R"J({"kind":"singleton","l":1,"functions":["x1"]})J")), ConfigError);
  EXPECT_THROW(map_from_json(json::parse(R"J({"kind":"singleton","d":1,"l":2,"functions":["x1"]})J")), ConfigError);
  EXPECT_THROW(map_from_json(json::parse(R"J({"kind":"singleton","d":1,"l":1,"functions":["x2"]})J")), ConfigError);
  EXPECT_THROW(map_from_json(json::parse(R"J({"kind":"generated","d":1,"l":1,"functions":["x1","x1+1","x1+2"]})J")),
               ConfigError);
  EXPECT_THROW(map_from_json(json::parse(R"J({"kind":"ball","d":1,"l":1,"functions":["x1"]})J")), ConfigError);
  EXPECT_THROW(map_from_json(json::parse(R"J({"kind":"truncated_epigraph","d":2})J")), ConfigError);
}
