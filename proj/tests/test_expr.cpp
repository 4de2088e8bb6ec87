#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <obleig/errors.hpp>
#include <obleig/expr.hpp>

using obleig::Expr;
using Catch::Approx;

TEST_CASE("arithmetic precedence and unary minus") {
  CHECK(Expr::parse("2 + 3*4^2").eval(0) == Approx(50.0));
  CHECK(Expr::parse("-x^2").eval(3) == Approx(-9.0));     // minus binds outside the power
  CHECK(Expr::parse("2^-1").eval(0) == Approx(0.5));      // exponent takes a unary chain
  CHECK(Expr::parse("(2 + 3)*4").eval(0) == Approx(20.0));
  CHECK(Expr::parse("7/2/2").eval(0) == Approx(1.75));    // left associative
  CHECK(Expr::parse("2^3^2").eval(0) == Approx(512.0));   // right associative
}

TEST_CASE("variables, pi and functions") {
  CHECK(Expr::parse("x - y").eval(5, 2) == Approx(3.0));
  CHECK(Expr::parse("cos(pi)").eval(0) == Approx(-1.0));
  CHECK(Expr::parse("sin(pi/2)").eval(0) == Approx(1.0));
  CHECK(Expr::parse("tanh(0)").eval(0) == Approx(0.0));
  CHECK(Expr::parse("abs(-3) + abs(2)").eval(0) == Approx(5.0));
  CHECK(Expr::parse("min(x, y) + max(x, y)").eval(4, 9) == Approx(13.0));
}

TEST_CASE("step is the right-continuous-at-half indicator") {
  Expr s = Expr::parse("step(x)");
  CHECK(s.eval(-1e-12) == 0.0);
  CHECK(s.eval(1e-12) == 1.0);
  CHECK(s.eval(0.0) == 0.5);
}

TEST_CASE("profiles used by the built-in problem files") {
  Expr shifted = Expr::parse("exp(x) + 1/4");
  CHECK(shifted.eval(0) == Approx(1.25));
  CHECK(shifted.derivative(0).eval(1) == Approx(std::exp(1.0)));

  Expr logistic_l = Expr::parse("1/(1 + exp(x))");
  CHECK(logistic_l.eval(0) == Approx(0.5));
  CHECK(logistic_l.eval(40) == Approx(0.0).margin(1e-15));
  // phi' = -phi(1-phi) for this profile
  CHECK(logistic_l.derivative(0).eval(1.3) ==
        Approx(-logistic_l.eval(1.3) * (1 - logistic_l.eval(1.3))));

  Expr clamp = Expr::parse("min(max(x, 0), 1) - 1/2");
  CHECK(clamp.eval(-3) == Approx(-0.5));
  CHECK(clamp.eval(0.7) == Approx(0.2));
  CHECK(clamp.eval(9) == Approx(0.5));

  Expr wave = Expr::parse("1 - 2*step(sin(pi*x))");
  CHECK(wave.eval(0.5) == Approx(-1.0));
  CHECK(wave.eval(1.5) == Approx(1.0));

  Expr transverse = Expr::parse("cos((pi^2/4 - 1/100)^0.5 * y)");
  double alpha = std::sqrt(obleig::kPi * obleig::kPi / 4 - 0.01);
  CHECK(transverse.eval(0, 0.3) == Approx(std::cos(alpha * 0.3)));
  // second derivative restores -alpha^2 cos
  CHECK(transverse.derivative(1).derivative(1).eval(0, 0.3) ==
        Approx(-alpha * alpha * std::cos(alpha * 0.3)));
}

TEST_CASE("symbolic differentiation follows product, chain and quotient rules") {
  Expr f = Expr::parse("x*exp(-x^2)");
  CHECK(f.derivative(0).eval(1) == Approx(std::exp(-1.0) * (1 - 2)));
  Expr q = Expr::parse("x/(1 + x^2)");
  // q' = (1 - x^2)/(1 + x^2)^2
  CHECK(q.derivative(0).eval(2) == Approx((1 - 4.0) / 25.0));
  CHECK_THROWS_AS(Expr::parse("x^x").derivative(0), obleig::UndifferentiableField);
}

TEST_CASE("constant folding is visible through is_constant") {
  double v = 0;
  CHECK(Expr::parse("3*4 + 1").is_constant(&v));
  CHECK(v == Approx(13.0));
  CHECK_FALSE(Expr::parse("x + 1").is_constant());
}

TEST_CASE("parse failures carry position context") {
  CHECK_THROWS_AS(Expr::parse("2 +"), obleig::ConfigError);
  CHECK_THROWS_AS(Expr::parse("foo(x)"), obleig::ConfigError);
  CHECK_THROWS_AS(Expr::parse("z + 1"), obleig::ConfigError);
  CHECK_THROWS_AS(Expr::parse("min(x)"), obleig::ConfigError);
  CHECK_THROWS_AS(Expr::parse("(x"), obleig::ConfigError);
  CHECK_THROWS_AS(Expr::parse("x 3"), obleig::ConfigError);
  CHECK_THROWS_WITH(Expr::parse("bogus(1)"), Catch::Matchers::ContainsSubstring("bogus"));
}

TEST_CASE("printed form re-parses to the same function") {
  for (const char* src : {"x*exp(-x^2) + min(x, y)", "1 - 2*step(sin(pi*x))",
                          "cos((pi^2/4 - 1/100)^0.5 * y)"}) {
    Expr e = Expr::parse(src);
    Expr round = Expr::parse(e.str());
    for (double x : {-1.7, 0.3, 2.9})
      for (double yy : {-0.4, 1.1}) CHECK(round.eval(x, yy) == Approx(e.eval(x, yy)).margin(1e-14));
  }
}
