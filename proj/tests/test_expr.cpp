#include <catch2/catch_amalgamated.hpp>

#include "cqrlab/expr.hpp"
#include "oracles.hpp"

using namespace cqr;

namespace {
const std::vector<std::string> kUXY = {"u", "x", "y"};
const std::vector<std::string> kX = {"x"};
}  // namespace

TEST_CASE("literal zero") {
  Expression e = parse_expression("0", kX);
  CHECK(e.root().kind == ExprNode::Kind::Constant);
  CHECK(e.root().value == 0.0);
}

TEST_CASE("canonical round trip") {
  Expression e = parse_expression("exp(4*u)*(x^2 - y^2)", kUXY);
  std::string printed = to_string(e, kUXY);
  CHECK(printed == "exp(4*u)*(x^2 - y^2)");
  CHECK(equivalent(e, parse_expression(printed, kUXY), kUXY));
}

TEST_CASE("print-parse is idempotent on assorted grammar") {
  const std::vector<std::string> inputs = {
      "x + -0.5*u",      "-(x + y)",          "x - (y - u)",     "x/(y*u)",
      "u^(-4)",          "2^3^2",             "-x^2",            "sqrt(x^2 + 1)",
      "sin(cos(x))",     "x*y/u",             "x - y - u",       "1.5e-3*x",
      "cosh(u)*sinh(u)", "(x + y)^2",         "x^2*y^3",         "-(-x)",
      "1/(1 - 2*x/y)",   "0.1*sin(x) - 0.2*y"};
  for (const auto& text : inputs) {
    CAPTURE(text);
    Expression e1 = parse_expression(text, kUXY);
    std::string p1 = to_string(e1, kUXY);
    Expression e2 = parse_expression(p1, kUXY);
    std::string p2 = to_string(e2, kUXY);
    CHECK(p1 == p2);
  }
}

TEST_CASE("syntax errors carry byte offsets") {
  try {
    parse_expression("x +", kX);
    FAIL("expected a syntax error");
  } catch (const SyntaxError& e) {
    CHECK(e.offset == 3);
  }
  CHECK_THROWS_AS(parse_expression("2x", kX), SyntaxError);          // no implicit product
  CHECK_THROWS_AS(parse_expression("x^y", kUXY), SyntaxError);       // non-literal exponent
  CHECK_THROWS_AS(parse_expression("(x", kX), SyntaxError);
  CHECK_THROWS_AS(parse_expression("frob(x)", kX), UnknownIdentifier);
  CHECK_THROWS_AS(parse_expression("x + q", kX), UnknownIdentifier);
}

TEST_CASE("parameters resolve through the map") {
  Expression e = parse_expression("M*x", kX, {"M"});
  CHECK(eval_value(e, {3.0}, {{"M", 2.0}}) == 6.0);
  CHECK_THROWS_AS(eval_value(e, {3.0}, {}), UnknownIdentifier);
}

TEST_CASE("polynomial jets are exact") {
  Expression e = parse_expression("x^2", kX);
  Jet j = eval_jet(e, {3.0}, {}, 2);
  CHECK(j.value() == 9.0);
  CHECK(j.deriv(0) == 6.0);
  CHECK(j.partial({2}) == 2.0);
}

TEST_CASE("sine jet at zero") {
  Expression e = parse_expression("sin(x)", kX);
  Jet j = eval_jet(e, {0.0}, {}, 3);
  CHECK(j.coeff(0) == Catch::Approx(0.0).margin(1e-16));
  CHECK(j.coeff(1) == Catch::Approx(1.0).margin(1e-16));
  CHECK(j.coeff(2) == Catch::Approx(0.0).margin(1e-16));
  CHECK(j.coeff(3) == Catch::Approx(-1.0 / 6.0).margin(1e-16));
}

TEST_CASE("mixed partials match finite differences to order 3") {
  Expression e = parse_expression("exp(4*u)*(x^2 - y^2)", kUXY);
  const std::vector<double> point = {0.1, 0.2, -0.3};
  Jet j = eval_jet(e, point, {}, 3);
  auto f = [&](const std::vector<double>& p) { return std::exp(4 * p[0]) * (p[1] * p[1] - p[2] * p[2]); };
  for (int a = 0; a <= 3; ++a)
    for (int b = 0; a + b <= 3; ++b)
      for (int c = 0; a + b + c <= 3; ++c) {
        double fd = oracle::fd_partial(f, point, {a, b, c}, 1e-4);
        double exact = j.partial({static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b),
                                  static_cast<std::uint8_t>(c)});
        CAPTURE(a, b, c);
        CHECK(exact == Catch::Approx(fd).epsilon(1e-6).margin(5e-6));
      }
}

TEST_CASE("random expressions agree with finite differences at orders 1 and 2") {
  // deterministic pool of smooth expressions over a safe box
  std::mt19937_64 rng(2024);
  const std::vector<std::string> pool = {
      "sin(x)*cos(y)", "exp(0.3*x - 0.2*y)", "x^2*y + u", "sqrt(4 + x^2)",
      "1/(3 + x + y)", "sinh(0.5*u)",        "cosh(x*y)", "log(3 + u^2)",
      "x^3 - 2*x*y^2", "exp(x)*sin(y)"};
  int tested = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::string& text = pool[rep % pool.size()];
    Expression e = parse_expression(text, kUXY);
    std::vector<double> p = {oracle::uniform(rng, -0.5, 0.5), oracle::uniform(rng, -0.5, 0.5),
                             oracle::uniform(rng, -0.5, 0.5)};
    Jet j = eval_jet(e, p, {}, 2);
    auto f = [&](const std::vector<double>& q) { return eval_value(e, q, {}); };
    for (int c = 0; c < 3; ++c) {
      std::vector<int> alpha = {0, 0, 0};
      alpha[static_cast<std::size_t>(c)] = 1;
      double fd = oracle::fd_partial(f, p, alpha, 1e-5);
      CHECK(std::abs(j.deriv(c) - fd) <= 1e-5 * (1.0 + std::abs(fd)));
      alpha[static_cast<std::size_t>(c)] = 2;
      double fd2 = oracle::fd_partial(f, p, alpha, 1e-4);
      double exact2 = j.partial({static_cast<std::uint8_t>(c == 0 ? 2 : 0),
                                 static_cast<std::uint8_t>(c == 1 ? 2 : 0),
                                 static_cast<std::uint8_t>(c == 2 ? 2 : 0)});
      CHECK(std::abs(exact2 - fd2) <= 1e-5 * (1.0 + std::abs(fd2)));
      ++tested;
    }
  }
  CHECK(tested >= 300);
}

TEST_CASE("domain failures surface as DomainError") {
  CHECK_THROWS_AS(eval_jet(parse_expression("log(x)", kX), {-1.0}, {}, 2), DomainError);
  CHECK_THROWS_AS(eval_jet(parse_expression("sqrt(x)", kX), {-0.5}, {}, 1), DomainError);
  CHECK_THROWS_AS(eval_jet(parse_expression("1/x", kX), {0.0}, {}, 1), DomainError);
}
