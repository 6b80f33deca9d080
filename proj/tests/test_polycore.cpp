#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "pk/polycore.hpp"

#include <cmath>
#include <random>
#include <set>

using namespace pk;

namespace {

// Direct evaluation from the exponent list, sharing nothing with MultiPoly.
double naive_eval(const Poly& P, const Vec& x) {
  const auto basis = monomial_basis(P.dim(), P.degree());
  double s = 0.0;
  for (std::size_t m = 0; m < basis.size(); ++m) {
    double t = P.coeffs()[static_cast<Eigen::Index>(m)];
    for (int i = 0; i < P.dim(); ++i) t *= std::pow(x[i], basis[m][static_cast<std::size_t>(i)]);
    s += t;
  }
  return s;
}

// Distinct roots in (a, b] located by a dense sign scan; only valid for
// polynomials with simple, well-separated roots.
int scan_roots(const UPoly& q, double a, double b, int steps = 200000) {
  int count = 0;
  double prev = q(a);
  for (int i = 1; i <= steps; ++i) {
    const double t = a + (b - a) * i / steps;
    const double v = q(t);
    if (v == 0.0 || (prev != 0.0 && (v > 0) != (prev > 0))) ++count;
    prev = v;
  }
  return count;
}

Poly random_poly(int n, int d, std::mt19937_64& eng) {
  std::normal_distribution<double> g;
  Vec c(static_cast<Eigen::Index>(binomial(n + d, d)));
  for (auto& v : c) v = g(eng);
  return Poly(n, d, c);
}

}  // namespace

TEST_CASE("basis sizes follow C(n+d, d) and Pascal's rule") {
  CHECK(monomial_basis(2, 3).size() == 10);
  CHECK(monomial_basis(3, 2).size() == 10);
  CHECK(monomial_basis(1, 2).size() == 3);
  for (int n = 1; n <= 4; ++n)
    for (int d = 0; d <= 6; ++d) {
      const auto size = monomial_basis(n, d).size();
      CHECK(size == binomial(n + d, d));
      if (n > 1 && d > 0) CHECK(size == monomial_basis(n - 1, d).size() + monomial_basis(n, d - 1).size());
    }
}

TEST_CASE("basis ordering: by degree, then descending exponents") {
  const auto b = monomial_basis(2, 2);
  const std::vector<MultiIndex> expect{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
  CHECK(b == expect);
  const auto b3 = monomial_basis(3, 3);
  std::set<MultiIndex> unique(b3.begin(), b3.end());
  CHECK(unique.size() == b3.size());
  int prev_deg = 0;
  for (const auto& a : b3) {
    int deg = 0;
    for (int e : a) deg += e;
    CHECK(deg >= prev_deg);
    prev_deg = deg;
  }
}

TEST_CASE("basis rejects bad arguments") {
  CHECK_THROWS_AS(monomial_basis(0, 2), Error);
  CHECK_THROWS_AS(monomial_basis(2, -1), Error);
}

TEST_CASE("degree needed to bisect r sets") {
  CHECK(stone_tukey_degree(2, 5) == 2);
  CHECK(stone_tukey_degree(2, 1) == 1);
  CHECK(stone_tukey_degree(3, 19) == 3);
  CHECK(stone_tukey_degree(2, 36) == 8);
  for (int n = 1; n <= 4; ++n)
    for (std::size_t r = 1; r < 200; r += 7) {
      const int d = stone_tukey_degree(n, r);
      CHECK(binomial(n + d, d) - 1 >= r);
      if (d > 0) CHECK(binomial(n + d - 1, d - 1) - 1 < r);
    }
}

TEST_CASE("evaluation and gradient agree with independent references") {
  std::mt19937_64 eng(7);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 4;
    const int d = trial % 5;
    const Poly P = random_poly(n, d, eng);
    Vec x(n);
    for (auto& v : x) v = u(eng);
    CHECK(P(x) == doctest::Approx(naive_eval(P, x)).epsilon(1e-12));
    const Vec g = P.gradient(x);
    for (int i = 0; i < n; ++i) {
      Vec xp = x, xm = x;
      xp[i] += 1e-6;
      xm[i] -= 1e-6;
      CHECK(g[i] == doctest::Approx((naive_eval(P, xp) - naive_eval(P, xm)) / 2e-6).epsilon(1e-5).scale(1.0));
    }
  }
}

TEST_CASE("a chart only reparametrizes") {
  // (x - 2)^2 + (y + 1)^2 - 1 written in the chart centred at (2, -1), scale 3.
  Chart<double> chart{Vec::Zero(2), 1.0};
  chart.center = (Vec(2) << 2.0, -1.0).finished();
  chart.scale = 3.0;
  const Poly P = Poly::from_terms(2, 2, {{{2, 0}, 9.0}, {{0, 2}, 9.0}, {{0, 0}, -1.0}}, chart);
  CHECK(P((Vec(2) << 3.0, -1.0).finished()) == doctest::Approx(0.0));
  CHECK(P((Vec(2) << 2.0, -1.0).finished()) == doctest::Approx(-1.0));
  const Vec g = P.gradient((Vec(2) << 2.0, 0.0).finished());
  CHECK(g[0] == doctest::Approx(0.0));
  CHECK(g[1] == doctest::Approx(2.0));
}

TEST_CASE("products expand correctly") {
  std::mt19937_64 eng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + trial % 2;
    const Poly a = random_poly(n, 1 + trial % 3, eng);
    const Poly b = random_poly(n, 1 + trial % 2, eng);
    const Poly ab = multiply(a, b);
    CHECK(ab.degree() == a.degree() + b.degree());
    Vec x(n);
    for (auto& v : x) v = u(eng);
    CHECK(ab(x) == doctest::Approx(a(x) * b(x)).epsilon(1e-11));
    const Surface s(std::vector<Poly>{a, b});
    CHECK(s.degree() == ab.degree());
    CHECK(s(x) == doctest::Approx(ab(x)).epsilon(1e-11));
    CHECK(s.expand()(x) == doctest::Approx(ab(x)).epsilon(1e-11));
  }
}

TEST_CASE("restriction to a line matches evaluation along the line") {
  std::mt19937_64 eng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 3;
    const int d = 1 + trial % 5;
    Poly P = random_poly(n, d, eng);
    if (trial % 2) P = Poly(n, d, P.coeffs(), Chart<double>{Vec::Constant(n, 0.3), 2.0});
    Vec p(n), dir(n);
    for (auto& v : p) v = u(eng);
    for (auto& v : dir) v = u(eng);
    const UPoly q = restrict_to_line(P, p, dir);
    CHECK(q.stored_degree() == d);
    for (double t : {-1.3, -0.2, 0.0, 0.7, 2.1}) {
      const Vec x = p + t * dir;
      CHECK(q(t) == doctest::Approx(P(x)).epsilon(1e-10).scale(1.0));
    }
  }
}

TEST_CASE("univariate helpers") {
  const UPoly q{1.0, -3.0, 0.0, 2.0};  // 2t^3 - 3t + 1
  CHECK(q.degree() == 3);
  CHECK(q(2.0) == doctest::Approx(11.0));
  const UPoly dq = q.derivative();
  CHECK(dq(2.0) == doctest::Approx(21.0));
  const UPoly c = q.compose_affine(0.5, 2.0);
  for (double s : {-1.0, 0.0, 0.3, 1.0}) CHECK(c(s) == doctest::Approx(q(0.5 + 2.0 * s)));
  CHECK(UPoly{0.0, 0.0}.degree() == -1);
}

TEST_CASE("root counts on small examples") {
  CHECK(count_distinct_roots(UPoly{-1.0, 0.0, 1.0}, -2.0, 2.0) == 2);
  CHECK(count_distinct_roots(UPoly{1.0, 0.0, 1.0}, -2.0, 2.0) == 0);
  CHECK(count_distinct_roots(UPoly{1.0, -2.0, 1.0}, 0.0, 2.0) == 1);
  // half-open interval: a root at the left end is excluded, at the right end included
  CHECK(count_distinct_roots(UPoly{-1.0, 1.0}, 1.0, 2.0) == 0);
  CHECK(count_distinct_roots(UPoly{-1.0, 1.0}, 0.0, 1.0) == 1);
  CHECK_FALSE(count_distinct_roots(UPoly{0.0, 0.0, 0.0}, 0.0, 1.0).has_value());
  CHECK_FALSE(count_distinct_roots(UPoly{1e-15, 0.0}, 0.0, 1.0, 10.0).has_value());
  // (t-1)^2 (t-3): distinct roots 1 and 3
  CHECK(count_distinct_roots(UPoly{-3.0, 7.0, -5.0, 1.0}, 0.0, 4.0) == 2);
}

TEST_CASE("root counts agree with a dense sign scan") {
  std::mt19937_64 eng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int deg = 1 + trial % 7;
    // build from well-separated roots to keep the scan trustworthy
    std::vector<double> roots;
    while (static_cast<int>(roots.size()) < deg) {
      const double r = 3.0 * u(eng);
      bool ok = true;
      for (double s : roots) ok = ok && std::abs(r - s) > 0.05;
      if (ok) roots.push_back(r);
    }
    // optionally drop a pair of real roots for a complex pair
    Vec c = Vec::Zero(1);
    c[0] = 1.0 + u(eng) * 0.5;
    auto mul_linear = [&](double r) {
      Vec out = Vec::Zero(c.size() + 1);
      out.head(c.size()) -= r * c;
      out.tail(c.size()) += c;
      c = out;
    };
    const bool complex_pair = deg >= 2 && trial % 3 == 0;
    for (std::size_t i = complex_pair ? 2 : 0; i < roots.size(); ++i) mul_linear(roots[i]);
    if (complex_pair) {
      Vec out = Vec::Zero(c.size() + 2);  // times (t^2 + 0.5)
      out.head(c.size()) += 0.5 * c;
      out.tail(c.size()) += c;
      c = out;
    }
    const UPoly q(c);
    const double a = -2.5, b = 2.7;
    const auto cnt = count_distinct_roots(q, a, b);
    REQUIRE(cnt.has_value());
    CHECK(*cnt == scan_roots(q, a, b));
    CHECK(*cnt <= q.degree());
    const auto found = real_roots(q, a, b);
    REQUIRE(found.has_value());
    CHECK(static_cast<int>(found->size()) == *cnt);
    for (double r : *found) CHECK(std::abs(q(r)) < 1e-8 * c.cwiseAbs().maxCoeff() * 100);
    ++checked;
  }
  CHECK(checked == 60);
}

TEST_CASE("line restrictions never exceed the degree") {
  std::mt19937_64 eng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 2;
    const int d = 1 + trial % 5;
    const Poly P = random_poly(n, d, eng);
    Vec p(n), dir(n);
    for (auto& v : p) v = u(eng);
    for (auto& v : dir) v = u(eng);
    const auto cnt = count_distinct_roots(restrict_to_line(P, p, dir), -5.0, 5.0, P.max_abs_coeff());
    REQUIRE(cnt.has_value());
    CHECK(*cnt <= d);
  }
}

TEST_CASE("a line inside the zero set is reported as contained") {
  // P = x2 * (x1 + x2 - 1): the x1 axis lies in Z
  const Poly a = Poly::linear((Vec(2) << 0.0, 1.0).finished(), 0.0);
  const Poly b = Poly::linear((Vec(2) << 1.0, 1.0).finished(), -1.0);
  const Poly P = multiply(a, b);
  const auto q = restrict_to_line(P, Vec::Zero(2), (Vec(2) << 1.0, 0.0).finished());
  CHECK_FALSE(count_distinct_roots(q, -1.0, 1.0, P.max_abs_coeff()).has_value());
  const auto q2 = restrict_to_line(P, (Vec(2) << 0.0, 0.5).finished(), (Vec(2) << 1.0, 0.0).finished());
  CHECK(count_distinct_roots(q2, -1.0, 1.0, P.max_abs_coeff()) == 1);
}

TEST_CASE("tangential contact counts once") {
  // unit circle against the line x2 = 1
  const Poly P = Poly::from_terms(2, 2, {{{2, 0}, 1.0}, {{0, 2}, 1.0}, {{0, 0}, -1.0}});
  const auto q = restrict_to_line(P, (Vec(2) << 0.0, 1.0).finished(), (Vec(2) << 1.0, 0.0).finished());
  CHECK(count_distinct_roots(q, -2.0, 2.0, 1.0) == 1);
}

TEST_CASE("coefficient validation") {
  CHECK_THROWS_AS(Poly(2, 2, Vec::Zero(5)), Error);
  Poly P(2, 1);
  CHECK_THROWS_AS(P.set_coeff({2, 0}, 1.0), Error);
  CHECK(P.coeff({2, 0}) == 0.0);
}

TEST_CASE("long double instantiation") {
  using LPoly = MultiPoly<long double>;
  VectorX<long double> c(3);
  c << -1.0L, 2.0L, 0.0L;  // 2 x1 - 1
  const LPoly P(2, 1, c);
  VectorX<long double> x(2);
  x << 0.5L, 3.0L;
  CHECK(static_cast<double>(P(x)) == doctest::Approx(0.0));
  const auto q = restrict_to_line(P, x, VectorX<long double>::Unit(2, 0));
  CHECK(count_distinct_roots<long double>(q, -1.0L, 1.0L) == 1);
}
