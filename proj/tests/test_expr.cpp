#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "fidcurve/expr.hpp"
#include "helpers.hpp"

using fidcurve::DomainError;
using fidcurve::Dual;
using fidcurve::Expression;
using fidcurve::ParseError;


namespace {
const std::vector<std::string> kT = {"t"};

double eval1(const std::string& src, double t) {
  return Expression::parse(src, kT).eval(std::map<std::string, double>{{"t", t}});
}

Dual dual1(const std::string& src, double t) {
  const double v[] = {t};
  return Expression::parse(src, kT).eval_dual(std::span<const double>(v, 1), 0);
}
}  // namespace

TEST_CASE("polynomial evaluation") {
  CHECK(eval1("3*t^2 + 1", 2.0) == 13.0);
  CHECK(eval1("t^3", 2.0) == 8.0);
  CHECK(eval1("t^3 - t", -1.0) == 0.0);
  CHECK(eval1("t^2", -3.0) == 9.0);
}

TEST_CASE("evaluation through a name map") {
  const auto e = Expression::parse("t^3", kT);
  CHECK(e.eval(std::map<std::string, double>{{"t", 2.0}}) == 8.0);
  CHECK_THROWS_AS(e.eval(std::map<std::string, double>{{"u", 2.0}}), DomainError);
}

TEST_CASE("precedence and associativity") {
  CHECK(eval1("2*3 + 4*5", 0.0) == 26.0);
  CHECK(eval1("2^3^2", 0.0) == 512.0);   // right associative
  CHECK(eval1("10 - 3 - 2", 0.0) == 5.0);  // left associative
  CHECK(eval1("6/3/2", 0.0) == 1.0);
  CHECK(eval1("-t^2", 3.0) == -9.0);  // unary minus binds looser than ^
  CHECK(eval1("(-2)^2", 0.0) == 4.0);
  CHECK(eval1("2^-3", 0.0) == 0.125);
  CHECK(eval1(" 3 * t ^ 2 ", 2.0) == eval1("3*t^2", 2.0));
}

TEST_CASE("numeric literals") {
  CHECK(eval1("1e3", 0.0) == 1000.0);
  CHECK(eval1("2.5e-2", 0.0) == 0.025);
  CHECK(eval1("0.5", 0.0) == 0.5);
}

TEST_CASE("syntax errors carry the offending offset") {
  try {
    Expression::parse("2*", kT);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 2);
  }
  CHECK_THROWS_AS(Expression::parse("", kT), ParseError);
  CHECK_THROWS_AS(Expression::parse("(t", kT), ParseError);
  CHECK_THROWS_AS(Expression::parse("t +* 2", kT), ParseError);
  CHECK_THROWS_AS(Expression::parse("2t", kT), ParseError);       // no implicit product
  CHECK_THROWS_AS(Expression::parse("foo(t)", kT), ParseError);   // unknown function
  CHECK_THROWS_AS(Expression::parse("t + u", kT), ParseError);    // unknown variable
}

TEST_CASE("domain errors during evaluation") {
  CHECK_THROWS_AS(eval1("sqrt(t)", -1.0), DomainError);
  CHECK_THROWS_AS(eval1("log(t)", 0.0), DomainError);
  CHECK_THROWS_AS(eval1("log(t)", -2.0), DomainError);
  CHECK_THROWS_AS(eval1("1/t", 0.0), DomainError);
  CHECK_THROWS_AS(eval1("t^0.5", -1.0), DomainError);
  CHECK_THROWS_AS(eval1("t^(-1)", 0.0), DomainError);
  CHECK(eval1("t^0.5", 4.0) == 2.0);
  CHECK(eval1("sqrt(t)", 4.0) == 2.0);
}

TEST_CASE("trigonometric identity") {
  for (double t : {-2.0, -0.3, 0.0, 0.7, 1.9}) {
    CHECK(std::abs(eval1("sin(t)^2 + cos(t)^2", t) - 1.0) <= 1e-15);
  }
}

TEST_CASE("dual evaluation of polynomials") {
  const Dual a = dual1("t^3 + t", 1.0);
  CHECK(a.val == 2.0);
  CHECK(a.der == 4.0);
  const Dual b = dual1("t^3", 2.0);
  CHECK(b.val == 8.0);
  CHECK(b.der == 12.0);
}

TEST_CASE("dual evaluation of a Gaussian kernel") {
  const Dual d = dual1("exp(-t^2/2)", 1.0);
  const double ref = std::exp(-0.5);
  CHECK(std::abs(d.val - ref) <= 1e-12);
  CHECK(std::abs(d.der - (-ref)) <= 1e-12);
  // Independent check against a central difference probe.
  const double fd =
      testutil::central_diff([](double t) { return eval1("exp(-t^2/2)", t); }, 1.0, 1e-5);
  CHECK(std::abs(d.der - fd) <= 1e-9);
}

TEST_CASE("dual evaluation by variable name") {
  const auto e = Expression::parse("x1*x2^2", std::vector<std::string>{"x1", "x2"});
  const Dual d = e.eval_dual(std::map<std::string, double>{{"x1", 3.0}, {"x2", 2.0}}, "x2");
  CHECK(d.val == 12.0);
  CHECK(d.der == 12.0);  // d/dx2 = 2*x1*x2
}

TEST_CASE("derivative of abs is zero at the kink") {
  CHECK(dual1("abs(t)", 0.0).der == 0.0);
  CHECK(dual1("abs(t)", -2.0).val == 2.0);
  CHECK(dual1("abs(t)", -2.0).der == -1.0);
  CHECK(dual1("abs(t)", 3.0).der == 1.0);
}

TEST_CASE("varying exponent uses exp-log form") {
  const Dual d = dual1("t^t", 1.5);
  const double v = std::pow(1.5, 1.5);
  CHECK(std::abs(d.val - v) <= 1e-14);
  CHECK(std::abs(d.der - v * (std::log(1.5) + 1.0)) <= 1e-13);
  CHECK_THROWS_AS(dual1("t^t", -1.0), DomainError);
}

TEST_CASE("free variables follow first appearance") {
  const auto e = Expression::parse("x2 + x1*x2", std::vector<std::string>{"x1", "x2"});
  REQUIRE(e.free_vars() == std::vector<std::string>{"x2", "x1"});
  CHECK(e.var_slot("x2") == 0);
  CHECK(e.var_slot("x1") == 1);
  const double v[] = {10.0, 1.0};  // x2 = 10, x1 = 1
  CHECK(e.eval(std::span<const double>(v, 2)) == 20.0);
}

TEST_CASE("substitution composes expressions") {
  const auto f = Expression::parse("x1 - t^3", std::vector<std::string>{"x1", "t"});
  const auto g = f.substitute("t", Expression::parse("r + 1", std::vector<std::string>{"r"}));
  const double got = g.eval(std::map<std::string, double>{{"x1", 30.0}, {"r", 1.0}});
  CHECK(got == 22.0);  // 30 - (1+1)^3
}

TEST_CASE("printing reproduces the identical tree") {
  const std::vector<std::string> sources = {
      "t^3",
      "3*t^2 + 1",
      "-t^2",
      "2^3^2",
      "(t + 1)*(t - 1)",
      "sin(t)^2 + cos(t)^2",
      "exp(-(t^6 + t^2)/2)",
      "1/(t^2 + 1)",
      "abs(t - 1) + sqrt(t^2 + 1)",
      "log(t^2 + 1) - t/3",
      "t^(-2)",
      "-(t + 1)",
      "t - (1 - t)",
      "2 - -t",
  };
  for (const auto& src : sources) {
    const auto e = Expression::parse(src, kT);
    const auto round = Expression::parse(e.str(), kT);
    INFO(src << "  ->  " << e.str());
    CHECK(e.same_tree(round));
  }
  CHECK_FALSE(Expression::parse("t + 1", kT).same_tree(Expression::parse("1 + t", kT)));
}

TEST_CASE("evaluation is deterministic") {
  const auto e = Expression::parse("exp(sin(t)*0.7) + log(t^2 + 1.3)", kT);
  const double v[] = {0.8375};
  const double a = e.eval(std::span<const double>(v, 1));
  const double b = e.eval(std::span<const double>(v, 1));
  CHECK(a == b);
  const Dual da = e.eval_dual(std::span<const double>(v, 1), 0);
  const Dual db = e.eval_dual(std::span<const double>(v, 1), 0);
  CHECK(da.val == db.val);
  CHECK(da.der == db.der);
}

TEST_CASE("randomized derivative agreement with finite differences") {
  fidcurve::Rng rng(20240817u);
  int checked = 0;
  for (int k = 0; k < 50; ++k) {
    const std::string src = testutil::gen_expr(rng, 3);
    Expression e = Expression::parse(src, kT);
    // Round trip while we are here.
    CHECK(e.same_tree(Expression::parse(e.str(), kT)));
    if (e.free_vars().empty()) continue;  // constant; nothing to differentiate
    for (int j = 0; j < 10; ++j) {
      const double t = -2.0 + 4.0 * fidcurve::uniform01(rng);
      const double v[] = {t};
      const Dual d = e.eval_dual(std::span<const double>(v, 1), 0);
      if (!std::isfinite(d.val) || !std::isfinite(d.der)) continue;
      if (std::abs(d.val) > 1e4 || std::abs(d.der) > 1e4) continue;
      const double fd = testutil::central_diff(
          [&](double x) {
            const double w[] = {x};
            return e.eval(std::span<const double>(w, 1));
          },
          t, 1e-5);
      INFO("expr: " << src << " at t = " << t);
      CHECK(std::abs(d.der - fd) <= 1e-6 * (1.0 + std::abs(d.der)));
      ++checked;
    }
  }
  CHECK(checked >= 400);
}
