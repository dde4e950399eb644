#include <cmath>

#include "doctest.h"
#include "triform/errors.hpp"
#include "triform/expr.hpp"

using namespace triform;

TEST_SUITE_BEGIN("expr");

TEST_CASE("arithmetic and precedence") {
  CHECK(Expr::parse("1 + 2*3").eval(0, 0, 0, 0) == doctest::Approx(7.0));
  CHECK(Expr::parse("(1 + 2)*3").eval(0, 0, 0, 0) == doctest::Approx(9.0));
  CHECK(Expr::parse("2^3^2").eval(0, 0, 0, 0) == doctest::Approx(512.0));
  CHECK(Expr::parse("-2^2").eval(0, 0, 0, 0) == doctest::Approx(-4.0));
  CHECK(Expr::parse("6/4/2").eval(0, 0, 0, 0) == doctest::Approx(0.75));
  CHECK(Expr::parse("1 - 2 - 3").eval(0, 0, 0, 0) == doctest::Approx(-4.0));
}

TEST_CASE("variables and constants") {
  Expr e = Expr::parse("x*y + z - 2*t");
  CHECK(e.eval(2, 3, 4, 0.5) == doctest::Approx(9.0));
  CHECK(Expr::parse("pi").eval(0, 0, 0, 0) == doctest::Approx(M_PI));
  CHECK(Expr::parse("cos(pi)").eval(0, 0, 0, 0) == doctest::Approx(-1.0));
}

TEST_CASE("functions") {
  CHECK(Expr::parse("sin(pi/2)").eval(0, 0, 0, 0) == doctest::Approx(1.0));
  CHECK(Expr::parse("sqrt(16)").eval(0, 0, 0, 0) == doctest::Approx(4.0));
  CHECK(Expr::parse("exp(0)").eval(0, 0, 0, 0) == doctest::Approx(1.0));
  CHECK(Expr::parse("abs(-3.5)").eval(0, 0, 0, 0) == doctest::Approx(3.5));
  CHECK(Expr::parse("tan(pi/4)").eval(0, 0, 0, 0) == doctest::Approx(1.0));
}

TEST_CASE("a typical inlet profile") {
  // parabolic inlet with a sinusoidal ramp
  Expr e = Expr::parse("1.5 * 4/(0.41^2) * y*(0.41 - y) * sin(pi*t/8)");
  const double y = 0.205, t = 4.0;
  CHECK(e.eval(0, y, 0, t) ==
        doctest::Approx(1.5 * 4 / (0.41 * 0.41) * y * (0.41 - y)));
}

TEST_CASE("point-and-time evaluation") {
  Expr e = Expr::parse("x + 10*t");
  CHECK(e.eval(Point{3, 0, 0}, 0.2) == doctest::Approx(5.0));
}

TEST_CASE("parse errors carry context") {
  CHECK_THROWS_AS(Expr::parse("1 +"), InvalidArgument);
  CHECK_THROWS_AS(Expr::parse("foo(3)"), InvalidArgument);
  CHECK_THROWS_AS(Expr::parse("(1 + 2"), InvalidArgument);
  CHECK_THROWS_AS(Expr::parse("1 2"), InvalidArgument);
  CHECK_THROWS_AS(Expr::parse("sin 3"), InvalidArgument);
  CHECK_THROWS_AS(Expr{}.eval(0, 0, 0, 0), InvalidArgument);
}

TEST_SUITE_END();
