#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "toricbern/errors.hpp"
#include "toricbern/expr.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

using namespace toricbern;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec x(static_cast<int>(v.size()));
  int i = 0;
  for (double c : v) x[i++] = c;
  return x;
}

// Random expressions that stay finite on [0, 1]^m.
class ExprGen {
public:
  ExprGen(int dim, std::uint64_t seed) : dim_(dim), rng_(seed) {}

  std::string make(int depth) {
    if (depth == 0 || pick(4) == 0) return leaf();
    const std::string a = make(depth - 1);
    switch (pick(10)) {
      case 0: return "(" + a + " + " + make(depth - 1) + ")";
      case 1: return "(" + a + " - " + make(depth - 1) + ")";
      case 2: return a + "*" + make(depth - 1);
      case 3: return a + "/(1.5 + cos(" + make(depth - 1) + "))";
      case 4: return "(" + a + ")^" + std::to_string(2 + pick(2));
      case 5: return "sin(" + a + ")";
      case 6: return "exp(" + a + "/4)";
      case 7: return "sqrt(1 + (" + a + ")^2)";
      case 8: return "log(2 + tanh(" + a + "))";
      default: return "-" + a;
    }
  }

  Vec point() {
    std::uniform_real_distribution<double> u(0.05, 0.95);
    Vec x(dim_);
    for (int j = 0; j < dim_; ++j) x[j] = u(rng_);
    return x;
  }

private:
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }
  std::string leaf() {
    if (pick(3) == 0) {
      static const char* consts[] = {"0.5", "2", "pi", "e", "1.25", "3"};
      return consts[pick(6)];
    }
    return "x" + std::to_string(1 + pick(dim_));
  }

  int dim_;
  std::mt19937_64 rng_;
};

}  // namespace

TEST_CASE("parse and evaluate") {
  CHECK(Expr::parse("x1^2 + 1", 1)(vec({2.0})) == 5.0);
  CHECK(Expr::parse("sin(pi*x1)*x2", 2)(vec({0.5, 3.0})) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(Expr::parse("exp(0)", 1)(vec({0.3})) == 1.0);
  CHECK(Expr::parse("x1^3", 1)(vec({2.0})) == 8.0);
  CHECK(Expr::parse("2^3^2", 1)(vec({0.0})) == 512.0);
  CHECK(Expr::parse("-x1^2", 1)(vec({3.0})) == -9.0);
  CHECK(Expr::parse("(-x1)^2", 1)(vec({3.0})) == 9.0);
  CHECK(Expr::parse("2^-1", 1)(vec({0.0})) == 0.5);
  CHECK(Expr::parse("8/4/2", 1)(vec({0.0})) == 1.0);
  CHECK(Expr::parse("1 - 2 - 3", 1)(vec({0.0})) == -4.0);
  CHECK(Expr::parse("  e ", 1)(vec({0.0})) == std::numbers::e);
  CHECK(Expr::parse("1.5e1 + .5", 1)(vec({0.0})) == 15.5);
  CHECK(Expr::parse("sqrt(x1) + tanh(0) + log(e)", 1)(vec({4.0})) == 3.0);
  CHECK(Expr::parse("x1^0.5", 1)(vec({9.0})) == doctest::Approx(3.0));
  CHECK(Expr::parse("x1^-2", 1)(vec({-2.0})) == 0.25);
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(Expr::parse("x3", 2), VariableOutOfRange);
  CHECK_THROWS_AS(Expr::parse("x0", 2), VariableOutOfRange);
  CHECK_THROWS_AS(Expr::parse("y + 1", 1), UnknownIdentifier);
  CHECK_THROWS_AS(Expr::parse("cosh(x1)", 1), UnknownIdentifier);
  try {
    Expr::parse("x1 + * 2", 1);
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& e) {
    CHECK(e.offset() == 5);
  }
  CHECK_THROWS_AS(Expr::parse("(x1 + 1", 1), SyntaxError);
  CHECK_THROWS_AS(Expr::parse("", 1), SyntaxError);
  CHECK_THROWS_AS(Expr::parse("x1 x1", 1), SyntaxError);
  CHECK_THROWS_AS(Expr::parse("sin x1", 1), SyntaxError);
  CHECK_THROWS_AS(Expr::parse("1 $ 2", 1), SyntaxError);
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(Expr::parse("log(x1)", 1)(vec({0.0})), DomainError);
  CHECK_THROWS_AS(Expr::parse("sqrt(x1)", 1)(vec({-1.0})), DomainError);
  CHECK_THROWS_AS(Expr::parse("1/x1", 1)(vec({0.0})), DomainError);
  CHECK_THROWS_AS(Expr::parse("x1^0.5", 1)(vec({-1.0})), DomainError);
  CHECK_THROWS_AS(Expr::parse("x1", 2)(vec({1.0})), DimensionMismatch);
}

TEST_CASE("symbolic derivatives") {
  const auto sq = Expr::parse("x1^2", 1).derivative(0);
  CHECK(sq.to_string() == "2*x1");
  CHECK(Expr::parse("sin(x1)", 1).derivative(0)(vec({0.0})) == 1.0);
  CHECK(Expr::parse("x1^4", 1).derivative(0).derivative(0)(vec({1.0})) == 12.0);
  CHECK(Expr::parse("x1^4", 1).derivative(0).derivative(0).derivative(0).derivative(0)(vec({0.7})) == 24.0);
  CHECK(Expr::parse("x2*x1^3", 2).derivative(1).to_string() == "x1^3");
  CHECK(Expr::parse("x2", 2).derivative(0).is_zero());
  CHECK(Expr::parse("3*x1 + 2", 1).derivative(0).is_constant());
  CHECK(Expr::parse("x1^x2", 2).derivative(1)(vec({2.0, 3.0})) == doctest::Approx(8.0 * std::log(2.0)));
  CHECK(Expr::parse("log(x1)", 1).derivative(0)(vec({4.0})) == 0.25);
  CHECK(Expr::parse("tanh(x1)", 1).derivative(0)(vec({0.0})) == 1.0);
}

TEST_CASE("derivatives agree with central differences") {
  const double h = 1e-5;
  for (int dim = 1; dim <= 3; ++dim) {
    ExprGen gen(dim, 1000 + static_cast<std::uint64_t>(dim));
    for (int trial = 0; trial < 60; ++trial) {
      const std::string text = gen.make(4);
      const Expr f = Expr::parse(text, dim);
      const Vec x = gen.point();
      for (int j = 0; j < dim; ++j) {
        Vec xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        const double fd = (f(xp) - f(xm)) / (2.0 * h);
        const double exact = f.derivative(j)(x);
        INFO(text);
        CHECK(std::abs(exact - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

TEST_CASE("printing round-trips") {
  for (int dim = 1; dim <= 3; ++dim) {
    ExprGen gen(dim, 77 + static_cast<std::uint64_t>(dim));
    for (int trial = 0; trial < 40; ++trial) {
      const std::string text = gen.make(5);
      const Expr f = Expr::parse(text, dim);
      const Expr g = Expr::parse(f.to_string(), dim);
      CHECK(g.to_string() == f.to_string());
      for (int k = 0; k < 100; ++k) {
        const Vec x = gen.point();
        const double a = f(x), b = g(x);
        INFO(text);
        CHECK(std::abs(a - b) <= 1e-15 * std::max(1.0, std::abs(a)));
      }
    }
  }
  const Expr d = Expr::parse("x1^2*exp(x1)", 1).derivative(0).derivative(0).derivative(0);
  CHECK(Expr::parse(d.to_string(), 1)(vec({0.4})) == d(vec({0.4})));
}
