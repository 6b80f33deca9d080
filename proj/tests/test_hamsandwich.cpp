#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "pk/hamsandwich.hpp"
#include "support.hpp"

using namespace pk;
using pk::test::vec;

namespace {

const SampleBudget kBudget{23, 1 << 16, true};

std::vector<Region> random_disks(int count, std::uint64_t seed) { return random_disjoint_balls(2, count, 8.0, seed); }

}  // namespace

TEST_CASE("line through two disk centres") {
  const std::vector<Region> disks{Ball{vec({0, 0}), 1.0}, Ball{vec({4, 1}), 1.0}};
  const auto r = solve_bisection({disks, 1, 0.01}, kBudget);
  REQUIRE(r.success);
  CHECK(r.defects.cwiseAbs().maxCoeff() <= 0.01);
  // the only bisecting line of two disjoint disks passes near both centres
  for (const auto& U : disks) {
    const Vec c = std::get<Ball>(U).center;
    const Vec g = r.P.gradient(c);
    CHECK(std::abs(r.P(c)) / g.norm() < 0.05);
  }
}

TEST_CASE("line through the centre of a square") {
  const auto r = solve_bisection({{Box{vec({0, 0}), vec({1, 1})}}, 1, 0.01}, kBudget);
  REQUIRE(r.success);
  const Vec c = vec({0.5, 0.5});
  CHECK(std::abs(r.P(c)) / r.P.gradient(c).norm() < 0.02);
}

TEST_CASE("five disks with a conic") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto r = solve_bisection({random_disks(5, seed), 2, 0.01}, SampleBudget{seed, 1 << 16, true});
    CHECK(r.success);
    CHECK(r.defects.cwiseAbs().maxCoeff() <= 0.01);
    CHECK(r.P.coeffs().norm() == doctest::Approx(1.0));
  }
}

TEST_CASE("too many sets are infeasible") {
  try {
    solve_bisection({random_disks(6, 4), 2, 0.01}, kBudget);
    FAIL("expected Infeasible");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Infeasible);
  }
  CHECK_THROWS_AS(solve_bisection({{Box{vec({0, 0}), vec({1e-4, 1e-4})}, Ball{vec({5, 5}), 0.0}}, 1, 0.01}, kBudget), Error);
}

TEST_CASE("bisects examples") {
  const Region ball = Ball{vec({0, 0}), 1.0};
  CHECK(bisects(Poly::linear(vec({1, 0}), 0.0), ball, 0.01, kBudget));
  CHECK_FALSE(bisects(Poly::linear(vec({1, 0}), -10.0), ball, 0.01, kBudget));
  // radius 1/sqrt 2 circle halves the unit disk
  const Poly circle = Poly::from_terms(2, 2, {{{2, 0}, 1.0}, {{0, 2}, 1.0}, {{0, 0}, -0.5}});
  CHECK(bisects(circle, ball, 0.01, kBudget));
}

TEST_CASE("defects flip exactly under negation and ignore scale") {
  const auto sets = random_disks(3, 7);
  const Poly P = Poly::from_terms(2, 2, {{{2, 0}, 0.3}, {{1, 1}, -0.2}, {{0, 1}, 1.0}, {{0, 0}, -4.0}});
  for (const auto& U : sets) {
    CHECK(signed_measure_split(-P, U, kBudget).value == -signed_measure_split(P, U, kBudget).value);
    CHECK(bisects(P, U, 0.01, kBudget) == bisects(3.5 * P, U, 0.01, kBudget));
    CHECK(bisects(P, U, 0.01, kBudget) == bisects(-0.2 * P, U, 0.01, kBudget));
  }
}

TEST_CASE("solver is deterministic") {
  const auto sets = random_disks(4, 9);
  const auto a = solve_bisection({sets, 2, 0.01}, kBudget);
  set_max_threads(1);
  const auto b = solve_bisection({sets, 2, 0.01}, kBudget);
  set_max_threads(0);
  CHECK(a.P.coeffs() == b.P.coeffs());
  CHECK(a.defects == b.defects);
}

TEST_CASE("bisecting a unit square gives a long enough cut") {
  // a curve halving a unit cube has length at least about its minimal section
  const std::vector<Region> sets{Box{vec({0, 0}), vec({1, 1})}, Ball{vec({3, 0.5}), 0.7}, Ball{vec({-1.5, 2}), 0.6}};
  const auto r = solve_bisection({sets, 2, 0.01}, kBudget);
  REQUIRE(r.success);
  const auto len = surface_integral(Surface(r.P), sets[0], [](const Vec&, const Vec&) { return 1.0; }, kBudget,
                                    SurfaceScheme::Lines);
  CHECK(len.value >= 0.9);
}
