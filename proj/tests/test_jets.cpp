#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "germforge/jet.hpp"
#include "germforge/sampling.hpp"

using namespace germforge;

namespace {

MultiIndex mi(std::vector<int> e) { return MultiIndex{std::move(e)}; }

// Random polynomial as a list of (exponents, coefficient).
struct Poly {
  int m;
  std::vector<std::pair<std::vector<int>, double>> terms;
};

Poly random_poly(Rng& rng, int m, int degree) {
  Poly p{m, {}};
  const auto& t = detail::jet_table(m);
  for (std::size_t a = 0; a < t.size_upto[static_cast<std::size_t>(degree)]; ++a)
    p.terms.emplace_back(t.monomials[a], rng.uniform(-1.0, 1.0));
  return p;
}

Jet eval_jet(const Poly& p, const std::vector<Jet>& x) {
  Jet acc(0.0);
  for (const auto& [e, c] : p.terms) {
    Jet mono(c);
    for (int i = 0; i < p.m; ++i) mono = mono * pow(x[static_cast<std::size_t>(i)], e[static_cast<std::size_t>(i)]);
    acc += mono;
  }
  return acc;
}

// d^alpha p at P by differentiating each monomial symbolically.
double symbolic_derivative(const Poly& p, const std::vector<int>& alpha, const Point& at) {
  double s = 0.0;
  for (const auto& [e, c] : p.terms) {
    double term = c;
    for (int i = 0; i < p.m && term != 0.0; ++i) {
      const int b = e[static_cast<std::size_t>(i)], a = alpha[static_cast<std::size_t>(i)];
      if (a > b) {
        term = 0.0;
        break;
      }
      for (int k = 0; k < a; ++k) term *= (b - k);
      term *= std::pow(at[static_cast<std::size_t>(i)], b - a);
    }
    s += term;
  }
  return s;
}

template <class F>
double composed(F&& f, const Point& p) {
  std::vector<Jet> x;
  for (double c : p) x.emplace_back(c);
  return f(x).value();
}

Jet expr(const std::vector<Jet>& x) {
  const Jet& a = x[0];
  const Jet& b = x[1];
  const Jet& c = x[2];
  return exp(sin(a * b) + Jet(0.3) * c) * sqrt(Jet(2.0) + cos(b)) + log(Jet(1.5) + a * a) / (Jet(3.0) + c * b);
}

}  // namespace

TEST(Jets, VariableHasValueAndUnitSlope) {
  const Jet x = Jet::variable(0, 2.0, 2, 2);
  EXPECT_EQ(x.coefficient(mi({0, 0})), 2.0);
  EXPECT_EQ(x.coefficient(mi({1, 0})), 1.0);
  EXPECT_EQ(x.coefficient(mi({0, 1})), 0.0);
  EXPECT_EQ(x.coefficient(mi({2, 0})), 0.0);
  const Jet y = Jet::variable(1, 0.0, 2, 1);
  EXPECT_EQ(y.coefficient(mi({0, 0})), 0.0);
  EXPECT_EQ(y.coefficient(mi({0, 1})), 1.0);
}

TEST(Jets, VariableRejectsBadIndex) {
  EXPECT_THROW(Jet::variable(2, 0.0, 2, 2), InputError);
  EXPECT_THROW(Jet::variable(-1, 0.0, 2, 2), InputError);
}

TEST(Jets, SquareAtThree) {
  const Jet x = Jet::variable(0, 3.0, 2, 2);
  const Jet sq = x * x;
  EXPECT_DOUBLE_EQ(sq.coefficient(mi({0, 0})), 9.0);
  EXPECT_DOUBLE_EQ(sq.coefficient(mi({1, 0})), 6.0);
  EXPECT_DOUBLE_EQ(sq.coefficient(mi({2, 0})), 1.0);
  EXPECT_DOUBLE_EQ(sq.derivative(mi({2, 0})), 2.0);
  EXPECT_DOUBLE_EQ(sq.derivative(mi({0, 0})), 9.0);
}

TEST(Jets, ElementaryFunctions) {
  const Jet e = exp(Jet(0.0));
  EXPECT_EQ(e.value(), 1.0);
  EXPECT_TRUE(e.is_constant());

  Jet x = Jet::variable(0, 2.0, 2, 2);
  const Jet r = reciprocal(x);
  EXPECT_DOUBLE_EQ(r.coefficient(mi({0, 0})), 0.5);
  EXPECT_DOUBLE_EQ(r.coefficient(mi({1, 0})), -0.25);
  EXPECT_DOUBLE_EQ(r.coefficient(mi({2, 0})), 0.125);

  const Jet s = sin(Jet::variable(0, 0.0, 1, 3));
  EXPECT_NEAR(s.coefficient(mi({0})), 0.0, 1e-16);
  EXPECT_DOUBLE_EQ(s.coefficient(mi({1})), 1.0);
  EXPECT_NEAR(s.coefficient(mi({2})), 0.0, 1e-16);
  EXPECT_DOUBLE_EQ(s.coefficient(mi({3})), -1.0 / 6.0);
}

TEST(Jets, MixedPartial) {
  const Jet p = Jet::variable(0, 0.7, 2, 2) * Jet::variable(1, -1.3, 2, 2);
  EXPECT_DOUBLE_EQ(p.derivative(mi({1, 1})), 1.0);
  EXPECT_THROW((void)p.derivative(mi({2, 1})), InputError);
}

TEST(Jets, DomainErrors) {
  const Jet z = Jet::variable(0, 0.0, 1, 2);
  EXPECT_THROW(reciprocal(z), DomainError);
  EXPECT_THROW(sqrt(z), DomainError);
  EXPECT_THROW(log(z - Jet(1.0)), DomainError);
  EXPECT_NO_THROW(sqrt(z + Jet(1e-3)));
}

TEST(Jets, ExactOnRandomPolynomials) {
  Rng rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const int m = 1 + trial % 4;
    const int k = 1 + trial % 4;
    const Poly p = random_poly(rng, m, k);
    const Point at = rng.in_ball(m, 1.5);
    const Jet j = eval_jet(p, coordinate_jets(at, k));
    const auto& t = detail::jet_table(m);
    for (std::size_t a = 0; a < t.size_upto[static_cast<std::size_t>(k)]; ++a) {
      const double want = symbolic_derivative(p, t.monomials[a], at);
      const double got = j.derivative(mi(t.monomials[a]));
      EXPECT_NEAR(got, want, 1e-12 * (1.0 + std::abs(want))) << "trial " << trial << " monomial " << a;
    }
  }
}

TEST(Jets, GradientMatchesCentralDifferences) {
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const Point p = rng.in_ball(3, 0.8);
    const Jet j = expr(coordinate_jets(p, 1));
    for (int i = 0; i < 3; ++i) {
      Point a = p, b = p;
      a[static_cast<std::size_t>(i)] += 1e-5;
      b[static_cast<std::size_t>(i)] -= 1e-5;
      const double fd = (composed(expr, a) - composed(expr, b)) / 2e-5;
      EXPECT_NEAR(j.gradient(i), fd, 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(Jets, AlgebraLaws) {
  Rng rng(3);
  const Point p = rng.in_ball(3, 1.0);
  const auto x = coordinate_jets(p, 4);
  const Jet a = sin(x[0]) + x[1] * x[2];
  const Jet b = exp(x[1] * Jet(0.5)) - x[0];
  const Jet c = cos(x[2]) * x[0] + Jet(2.0);
  auto close = [](const Jet& u, const Jet& v) {
    double d = 0.0;
    for (std::size_t i = 0; i < u.coefficients().size(); ++i)
      d = std::max(d, std::abs(u.coefficients()[i] - v.coefficients()[i]));
    return d;
  };
  EXPECT_LE(close(a + b, b + a), 1e-14);
  EXPECT_LE(close(a * b, b * a), 1e-14);
  EXPECT_LE(close((a + b) + c, a + (b + c)), 1e-14);
  EXPECT_LE(close((a * b) * c, a * (b * c)), 1e-13);
  EXPECT_LE(close(a * (b + c), a * b + a * c), 1e-13);
}

TEST(Jets, ChainRuleThroughSubstitution) {
  // f(y) = exp(y0) * y1 evaluated at y(x) = (x0*x1, sin x1)
  Rng rng(5);
  const Point p = rng.in_ball(2, 1.0);
  const auto x = coordinate_jets(p, 4);
  const std::vector<Jet> y{x[0] * x[1], sin(x[1])};
  const Point y0{y[0].value(), y[1].value()};
  const auto yv = coordinate_jets(y0, 4);
  const Jet f_at_y0 = exp(yv[0]) * yv[1];
  const Jet via_sub = substitute(f_at_y0, y);
  const Jet direct = exp(y[0]) * y[1];
  for (std::size_t i = 0; i < direct.coefficients().size(); ++i)
    EXPECT_NEAR(via_sub.coefficients()[i], direct.coefficients()[i], 1e-13);
}

TEST(Jets, PartialLowersOrder) {
  const auto x = coordinate_jets(Point{0.5, -0.25}, 3);
  const Jet f = x[0] * x[0] * x[1];
  const Jet df = f.partial(0);
  EXPECT_EQ(df.order(), 2);
  EXPECT_DOUBLE_EQ(df.value(), 2.0 * 0.5 * -0.25);
  EXPECT_DOUBLE_EQ(df.derivative(mi({1, 0})), 2.0 * -0.25);
  EXPECT_DOUBLE_EQ(df.derivative(mi({1, 1})), 2.0);
}

TEST(Jets, LargeDimensionTablesAreConsistent) {
  const auto& t = detail::jet_table(8);
  EXPECT_EQ(t.size_upto[4], 495u);
  const auto x = coordinate_jets(Point(8, 0.1), 4);
  Jet prod(1.0);
  for (const auto& xi : x) prod = prod * (Jet(1.0) + xi);
  // d_0 d_1 d_2 d_3 of prod(1 + x_i) = prod over the other four factors
  EXPECT_NEAR(prod.derivative(mi({1, 1, 1, 1, 0, 0, 0, 0})), std::pow(1.1, 4), 1e-13);
}
