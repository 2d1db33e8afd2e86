#include <catch2/catch_amalgamated.hpp>

#include "cqrlab/jet.hpp"
#include "oracles.hpp"

using cqr::Jet;
using cqr::JetLayout;

namespace {

Jet random_jet(std::mt19937_64& rng, const std::shared_ptr<const JetLayout>& layout,
               double value_floor = 0.0) {
  Jet j = Jet::constant(layout, 0.0);
  for (int s = 0; s < layout->size(); ++s) j.coeff(s) = oracle::uniform(rng, -1.0, 1.0);
  if (value_floor > 0.0 && std::abs(j.value()) < value_floor)
    j.coeff(0) = value_floor + std::abs(j.value());
  return j;
}

}  // namespace

TEST_CASE("layout coefficient counts") {
  // sum_k C(n+k-1, k)
  CHECK(JetLayout::get(2, 2)->size() == 6);
  CHECK(JetLayout::get(3, 3)->size() == 20);
  CHECK(JetLayout::get(4, 3)->size() == 35);
  CHECK(JetLayout::get(4, 4)->size() == 70);
  CHECK(JetLayout::get(5, 4)->size() == 126);
}

TEST_CASE("variable seeds") {
  auto l21 = JetLayout::get(2, 1);
  Jet x = Jet::variable(JetLayout::get(2, 2), 0, 2.5);
  CHECK(x.value() == 2.5);
  CHECK(x.deriv(0) == 1.0);
  CHECK(x.deriv(1) == 0.0);

  Jet y = Jet::variable(l21, 1, 0.0);
  CHECK(y.value() == 0.0);
  CHECK(y.deriv(0) == 0.0);
  CHECK(y.deriv(1) == 1.0);

  // (x+h)^2 expansion: value 9, gradient 6, Taylor-normalized second slot 1
  Jet x3 = Jet::variable(JetLayout::get(1, 2), 0, 3.0);
  Jet sq = x3 * x3;
  CHECK(sq.value() == 9.0);
  CHECK(sq.deriv(0) == 6.0);
  CHECK(sq.coeff(2) == 1.0);
  CHECK(sq.partial({2}) == 2.0);
}

TEST_CASE("product rule at order 2") {
  auto layout = JetLayout::get(2, 2);
  Jet x = Jet::variable(layout, 0, 1.0);
  Jet y = Jet::variable(layout, 1, 2.0);
  Jet p = x * y;
  CHECK(p.value() == 2.0);
  CHECK(p.deriv(0) == 2.0);
  CHECK(p.deriv(1) == 1.0);
  CHECK(p.partial({1, 1}) == 1.0);
  CHECK(p.partial({2, 0}) == 0.0);
}

TEST_CASE("geometric series from division") {
  Jet x = Jet::variable(JetLayout::get(1, 3), 0, 0.0);
  Jet g = Jet::constant(x.layout_ptr(), 1.0) / (x + 1.0);
  CHECK(g.coeff(0) == Catch::Approx(1.0).margin(1e-15));
  CHECK(g.coeff(1) == Catch::Approx(-1.0).margin(1e-15));
  CHECK(g.coeff(2) == Catch::Approx(1.0).margin(1e-15));
  CHECK(g.coeff(3) == Catch::Approx(-1.0).margin(1e-15));
}

TEST_CASE("sine Taylor line") {
  Jet x = Jet::variable(JetLayout::get(1, 3), 0, 0.0);
  Jet s = sin(x);
  CHECK(s.coeff(0) == Catch::Approx(0.0).margin(1e-15));
  CHECK(s.coeff(1) == Catch::Approx(1.0).margin(1e-15));
  CHECK(s.coeff(2) == Catch::Approx(0.0).margin(1e-15));
  CHECK(s.coeff(3) == Catch::Approx(-1.0 / 6.0).margin(1e-15));
}

TEST_CASE("composition against finite differences") {
  // exp(x^2) at 0.5 through order 3
  auto f = [](const std::vector<double>& p) { return std::exp(p[0] * p[0]); };
  Jet x = Jet::variable(JetLayout::get(1, 3), 0, 0.5);
  Jet e = exp(x * x);
  for (int k = 0; k <= 3; ++k) {
    double fd = oracle::fd_partial(f, {0.5}, {k}, 1e-4);
    CHECK(e.partial({static_cast<std::uint8_t>(k)}) ==
          Catch::Approx(fd).epsilon(1e-6).margin(1e-8));
  }
}

TEST_CASE("ring axioms on random jets") {
  std::mt19937_64 rng(7);
  auto layout = JetLayout::get(3, 3);
  for (int rep = 0; rep < 50; ++rep) {
    Jet a = random_jet(rng, layout);
    Jet b = random_jet(rng, layout);
    Jet c = random_jet(rng, layout);
    Jet lhs = (a + b) * c;
    Jet rhs = a * c + b * c;
    double scale = 0.0, diff = 0.0;
    for (int s = 0; s < layout->size(); ++s) {
      scale = std::max(scale, std::abs(lhs.coeff(s)));
      diff = std::max(diff, std::abs(lhs.coeff(s) - rhs.coeff(s)));
    }
    CHECK(diff <= 1e-12 * (1.0 + scale));

    Jet w = random_jet(rng, layout, 0.5);
    Jet one = w * reciprocal(w);
    CHECK(std::abs(one.value() - 1.0) <= 1e-12);
    for (int s = 1; s < layout->size(); ++s) CHECK(std::abs(one.coeff(s)) <= 1e-10);
  }
}

TEST_CASE("exp then log round trip") {
  std::mt19937_64 rng(11);
  auto layout = JetLayout::get(2, 4);
  for (int rep = 0; rep < 20; ++rep) {
    Jet a = random_jet(rng, layout);
    Jet back = log(exp(a));
    for (int s = 0; s < layout->size(); ++s)
      CHECK(back.coeff(s) == Catch::Approx(a.coeff(s)).margin(1e-10));
  }
}

TEST_CASE("multiplication is plain coefficient convolution") {
  auto layout = JetLayout::get(2, 2);
  std::mt19937_64 rng(3);
  Jet a = random_jet(rng, layout);
  Jet b = random_jet(rng, layout);
  Jet p = a * b;
  // brute-force convolution straight off the multi-index table
  for (int s = 0; s < layout->size(); ++s) {
    const auto& target = layout->exponents(s);
    double acc = 0.0;
    for (int u = 0; u < layout->size(); ++u)
      for (int v = 0; v < layout->size(); ++v) {
        bool match = true;
        for (int c = 0; c < 2; ++c)
          if (layout->exponents(u)[static_cast<std::size_t>(c)] +
                  layout->exponents(v)[static_cast<std::size_t>(c)] !=
              target[static_cast<std::size_t>(c)])
            match = false;
        if (match) acc += a.coeff(u) * b.coeff(v);
      }
    CHECK(p.coeff(s) == Catch::Approx(acc).margin(1e-14));
  }
}

TEST_CASE("derivative operation shifts multi-indices") {
  auto layout = JetLayout::get(2, 3);
  Jet x = Jet::variable(layout, 0, 1.5);
  Jet y = Jet::variable(layout, 1, -0.5);
  Jet f = x * x * y + y * y;  // f_x = 2xy, f_xy = 2x
  Jet fx = f.derivative(0);
  CHECK(fx.value() == Catch::Approx(2.0 * 1.5 * -0.5));
  CHECK(fx.deriv(1) == Catch::Approx(2.0 * 1.5));
}

TEST_CASE("integer and negative powers") {
  Jet x = Jet::variable(JetLayout::get(1, 3), 0, 0.0);
  Jet p = pow(x, 2.0);  // fine at 0 for integer exponents
  CHECK(p.coeff(2) == 1.0);
  Jet u = Jet::variable(JetLayout::get(1, 2), 0, 2.0);
  Jet q = pow(u, -4.0);
  CHECK(q.value() == Catch::Approx(std::pow(2.0, -4)));
  CHECK(q.deriv(0) == Catch::Approx(-4.0 * std::pow(2.0, -5)));
  CHECK_THROWS_AS(pow(x, 0.5), cqr::DomainError);
  CHECK_THROWS_AS(log(x), cqr::DomainError);
  CHECK_THROWS_AS(Jet::constant(x.layout_ptr(), 1.0) / x, cqr::DomainError);
}

TEST_CASE("truncation keeps the leading coefficients") {
  auto layout = JetLayout::get(3, 4);
  std::mt19937_64 rng(5);
  Jet a = random_jet(rng, layout);
  Jet t = a.truncated(2);
  CHECK(t.order() == 2);
  for (int s = 0; s < t.layout().size(); ++s) CHECK(t.coeff(s) == a.coeff(s));
}
