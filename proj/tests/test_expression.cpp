#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hfv/expression.hpp"
#include "hfv/problem.hpp"

#include <cmath>
#include <random>

using namespace hfv;

TEST_CASE("literals, variables and precedence") {
  CHECK(Expression::parse("2+3*4").eval(Vec3::Zero(), 0) == doctest::Approx(14.0));
  CHECK(Expression::parse("(2+3)*4").eval(Vec3::Zero(), 0) == doctest::Approx(20.0));
  CHECK(Expression::parse("2^3^2").eval(Vec3::Zero(), 0) == doctest::Approx(512.0));
  CHECK(Expression::parse("-2^2").eval(Vec3::Zero(), 0) == doctest::Approx(-4.0));
  CHECK(Expression::parse("2^-1").eval(Vec3::Zero(), 0) == doctest::Approx(0.5));
  CHECK(Expression::parse("6/3/2").eval(Vec3::Zero(), 0) == doctest::Approx(1.0));
  CHECK(Expression::parse("1 - 2 - 3").eval(Vec3::Zero(), 0) == doctest::Approx(-4.0));
  CHECK(Expression::parse("x1+2*x2-x3*t").eval(Vec3(1, 2, 3), 2.0) == doctest::Approx(-1.0));
}

TEST_CASE("functions") {
  CHECK(Expression::parse("exp(x1+x2+x3-t-3)").eval(Vec3(1, 1, 1), 0.0) ==
        doctest::Approx(1.0).epsilon(1e-15));
  CHECK(Expression::parse("sqrt(abs(-9))").eval(Vec3::Zero(), 0) == doctest::Approx(3.0));
  CHECK(Expression::parse("sign(-2.5)").eval(Vec3::Zero(), 0) == -1.0);
  CHECK(Expression::parse("sign(0)").eval(Vec3::Zero(), 0) == 0.0);
  CHECK(Expression::parse("sign(t)").eval(Vec3::Zero(), 4.0) == 1.0);
}

TEST_CASE("traveling-wave expression at the front") {
  const Expression e = Expression::parse("(1-exp(40*(x1-0.8*t-0.2)))^2");
  CHECK(e.eval(Vec3(0.2, 0, 0), 0.0) == 0.0);
  CHECK(e.eval(Vec3(0.4, 0.3, 0.9), 0.25) == 0.0);
  // Slightly off the front only roundoff survives.
  CHECK(e.eval(Vec3(0.6, 0.3, 0.9), 0.5) <= 1e-28);
}

TEST_CASE("parse errors carry positions") {
  CHECK_THROWS_AS(Expression::parse(""), ExpressionError);
  CHECK_THROWS_AS(Expression::parse("2+"), ExpressionError);
  CHECK_THROWS_AS(Expression::parse("2+*3"), ExpressionError);
  CHECK_THROWS_AS(Expression::parse("(1+2"), ExpressionError);
  CHECK_THROWS_AS(Expression::parse("foo(1)"), ExpressionError);
  CHECK_THROWS_AS(Expression::parse("x4"), ExpressionError);
  CHECK_THROWS_AS(Expression::parse("exp 2"), ExpressionError);
  CHECK_THROWS_AS(Expression::parse("1 2"), ExpressionError);
  try {
    Expression::parse("1 + bogus");
  } catch (const ExpressionError& e) {
    CHECK(e.pos == 4);
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
}

TEST_CASE("evaluation domain errors") {
  const Expression e = Expression::parse("sqrt(x1)");
  CHECK(e.eval(Vec3(4, 0, 0), 0) == doctest::Approx(2.0));
  CHECK_THROWS_AS(e.eval(Vec3(-1, 0, 0), 0), ExpressionError);
}

TEST_CASE("evaluator matches the built-in exact solutions") {
  std::mt19937_64 rng(424242);
  auto uniform = [&rng](double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
  };

  const ProblemSpec heterogeneous = make_test1();
  const Expression e1 = Expression::parse("exp(x1+x2+x3-t-3)");
  for (int i = 0; i < 1000; ++i) {
    const Vec3 x(uniform(0, 2), uniform(0, 1), uniform(0, 1));
    const double t = uniform(0, 1);
    const double a = e1.eval(x, t);
    const double b = heterogeneous.exact(x, t);
    CHECK(std::abs(a - b) <= 1e-15 * std::abs(b));
  }

  // Guarded form of the traveling wave (the factor vanishes ahead of the
  // front, where the closed form is identically zero).
  const ProblemSpec wave = make_test2(0.2, 0.8, 0.01);
  const Expression e2 =
      Expression::parse("0.5*(1-sign(x1-0.8*t-0.2))*(1-exp(40*(x1-0.8*t-0.2)))^2");
  for (int i = 0; i < 1000; ++i) {
    const double t = uniform(0, 1);
    const Vec3 x(uniform(0, 1), uniform(0, 1), uniform(0, 1));
    const double a = e2.eval(x, t);
    const double b = wave.exact(x, t);
    CHECK(std::abs(a - b) <= 1e-15 * std::max(1.0, std::abs(b)));
  }
}
