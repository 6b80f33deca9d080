#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "pk/dirvol.hpp"
#include "support.hpp"

#include <numbers>
#include <random>

using namespace pk;
using pk::test::vec;

namespace {

const SampleBudget kBudget{11, 1 << 16, true};

Poly line_x2() { return Poly::linear(vec({0, 1}), 0.0); }
Poly circle() { return Poly::from_terms(2, 2, {{{2, 0}, 1.0}, {{0, 2}, 1.0}, {{0, 0}, -1.0}}); }
Region unit_square() { return Box{vec({0, 0}), vec({1, 1})}; }
Region big_square() { return Box{vec({-2, -2}), vec({2, 2})}; }

Poly random_poly(int n, int d, std::mt19937_64& eng) {
  std::normal_distribution<double> g;
  Vec c(static_cast<Eigen::Index>(binomial(n + d, d)));
  for (auto& v : c) v = g(eng);
  return Poly(n, d, c);
}

Vec random_vec(int n, std::mt19937_64& eng) {
  std::normal_distribution<double> g;
  Vec v(n);
  for (auto& x : v) x = g(eng);
  return v;
}

}  // namespace

TEST_CASE("directed volume of a unit segment") {
  for (auto scheme : {SurfaceScheme::Slab, SurfaceScheme::Lines}) {
    CHECK(directed_volume_surface(line_x2(), unit_square(), vec({0, 1}), kBudget, scheme).value ==
          doctest::Approx(1.0).epsilon(0.02));
    CHECK(std::abs(directed_volume_surface(line_x2(), unit_square(), vec({1, 0}), kBudget, scheme).value) < 0.02);
  }
  const auto f = directed_volume_fiber(line_x2(), unit_square(), vec({0, 1}), kBudget);
  CHECK(f.value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.std_error == doctest::Approx(0.0));
}

TEST_CASE("directed volume of the unit circle") {
  // integral of |cos t| over the circle
  const double oracle = pk::test::simpson([](double t) { return std::abs(std::cos(t)); }, 0.0, 2 * std::numbers::pi);
  CHECK(oracle == doctest::Approx(4.0).epsilon(1e-6));
  const auto f = directed_volume_fiber(circle(), big_square(), vec({1, 0}), kBudget);
  CHECK(f.value == doctest::Approx(oracle).epsilon(0.02));
  // the slab scheme needs a larger budget for the same accuracy
  CHECK(directed_volume_surface(circle(), big_square(), vec({1, 0}), SampleBudget{11, 1 << 22, true}, SurfaceScheme::Slab)
            .value == doctest::Approx(oracle).epsilon(0.02));
  CHECK(directed_volume_surface(circle(), big_square(), vec({1, 0}), kBudget, SurfaceScheme::Lines).value ==
        doctest::Approx(oracle).epsilon(0.02));
}

TEST_CASE("hyperplane across a tube") {
  for (int n : {2, 3}) {
    Vec core = Vec::Zero(n), axis = Vec::Unit(n, 0);
    const Region tube = make_tube(core, axis, 1.0, 4.0);
    const auto f = directed_volume_fiber(Poly::linear(axis, 0.0), tube, axis, kBudget);
    CHECK(f.value == doctest::Approx(unit_ball_volume(n - 1)).epsilon(0.01));
  }
}

TEST_CASE("cylinder bound values") {
  CHECK(cylinder_bound(2, 1.0, 3) == doctest::Approx(6.0));
  CHECK(cylinder_bound(3, 1.0, 1) == doctest::Approx(std::numbers::pi));
  CHECK(cylinder_bound(3, 2.0, 4) == doctest::Approx(16 * std::numbers::pi));
  CHECK_THROWS_AS(cylinder_bound(0, 1.0, 1), Error);
}

TEST_CASE("fiber scaling is homogeneous") {
  std::mt19937_64 eng(3);
  const Poly P = random_poly(2, 3, eng);
  const Vec v = vec({0.3, -0.8});
  const double base = directed_volume_fiber(P, big_square(), v, kBudget).value;
  for (double lambda : {2.0, -0.5, 7.25}) {
    const double scaled = directed_volume_fiber(P, big_square(), Vec(lambda * v), kBudget).value;
    CHECK(scaled == doctest::Approx(std::abs(lambda) * base).epsilon(1e-9));
  }
}

TEST_CASE("fiber estimate is convex in the direction") {
  std::mt19937_64 eng(5);
  std::uniform_real_distribution<double> unif;
  for (int trial = 0; trial < 6; ++trial) {
    const int n = 2 + trial % 2;
    const Poly P = random_poly(n, 2 + trial % 3, eng);
    const Region U = Box{Vec::Constant(n, -1), Vec::Constant(n, 1)};
    const Vec v = random_vec(n, eng), w = random_vec(n, eng);
    const double t = unif(eng);
    const auto a = directed_volume_fiber(P, U, v, kBudget);
    const auto b = directed_volume_fiber(P, U, w, kBudget);
    const auto m = directed_volume_fiber(P, U, Vec(t * v + (1 - t) * w), kBudget);
    CHECK(m.value <= t * a.value + (1 - t) * b.value + 3 * (m.std_error + a.std_error + b.std_error));
  }
}

TEST_CASE("fiber estimate adds over disjoint cubes") {
  std::mt19937_64 eng(9);
  for (int trial = 0; trial < 4; ++trial) {
    const Poly P = random_poly(2, 3, eng);
    const Vec v = random_vec(2, eng);
    const auto left = directed_volume_fiber(P, Box{vec({0, 0}), vec({1, 1})}, v, kBudget);
    const auto right = directed_volume_fiber(P, Box{vec({1, 0}), vec({2, 1})}, v, kBudget);
    const auto both = directed_volume_fiber(P, Box{vec({0, 0}), vec({2, 1})}, v, kBudget);
    const double err = std::sqrt(left.std_error * left.std_error + right.std_error * right.std_error +
                                 both.std_error * both.std_error);
    CHECK(std::abs(left.value + right.value - both.value) <= 3 * err + 1e-9);
  }
}

TEST_CASE("fiber and surface estimates agree") {
  std::mt19937_64 eng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + trial % 2;
    const Poly P = random_poly(n, 1 + trial % 4, eng);
    const Region U = Box{Vec::Constant(n, -1), Vec::Constant(n, 1)};
    const Vec v = random_vec(n, eng);
    const double f = directed_volume_fiber(P, U, v, kBudget).value;
    const double s = directed_volume_surface(P, U, v, kBudget, SurfaceScheme::Lines).value;
    CHECK(s == doctest::Approx(f).epsilon(0.05));
  }
}

TEST_CASE("cylinder estimate on clipped axis tubes") {
  std::mt19937_64 eng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 2, d = 1 + trial % 5;
    const Poly P = random_poly(n, d, eng);
    const Vec axis = Vec::Unit(n, trial % n);
    const Region tube = make_tube(Vec::Zero(n), axis, 1.0, 20.0);
    const auto f = directed_volume_fiber(P, tube, axis, SampleBudget{trial + 1u, 1 << 14, true});
    CHECK(f.value <= cylinder_bound(n, 1.0, d) + 3 * f.std_error);
  }
}

TEST_CASE("contained lines count their degree only when common") {
  // x2 = 0 contains every fiber along e1 at height 0: a null set of fibers
  const auto sparse = directed_volume_fiber(line_x2(), unit_square(), vec({1, 0}), kBudget);
  CHECK(sparse.value == doctest::Approx(0.0));
  // x2^2 - 0.25 restricted to the strip around height 1/2 is not contained anywhere
  const Poly P = Poly::from_terms(2, 2, {{{0, 2}, 1.0}, {{0, 0}, -0.25}});
  const auto f = directed_volume_fiber(P, unit_square(), vec({0, 1}), kBudget);
  CHECK(f.value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("axis sum lower bound") {
  const SampleBudget b{5, 1 << 16, true};
  auto seg = axis_sum_lower_bound_check(line_x2(), unit_square(), {vec({1, 0}), vec({0, 1})}, b);
  CHECK(seg.volume == doctest::Approx(1.0).epsilon(0.02));
  CHECK(seg.axis_sum == doctest::Approx(1.0).epsilon(0.02));
  CHECK(seg.holds);
  const Poly diag = Poly::linear(vec({1, -1}), 0.0);
  auto dg = axis_sum_lower_bound_check(diag, unit_square(), {vec({1, 0}), vec({0, 1})}, b);
  CHECK(dg.volume == doctest::Approx(std::sqrt(2.0)).epsilon(0.02));
  // each axis sees length sqrt 2 at |cos| = 1/sqrt 2
  CHECK(dg.axis_sum == doctest::Approx(2 * std::sqrt(2.0) / std::sqrt(2.0)).epsilon(0.02));
  CHECK(dg.volume <= 2 * dg.axis_sum);
  CHECK(dg.holds);

  std::mt19937_64 eng(41);
  const Region cube = Box{Vec::Zero(3), Vec::Ones(3)};
  for (int trial = 0; trial < 10; ++trial) {
    const Poly P = random_poly(3, 3, eng);
    std::vector<Vec> v;
    for (int j = 0; j < 3; ++j) v.push_back((Vec::Unit(3, j) + 1e-3 * random_vec(3, eng)).normalized());
    CHECK(axis_sum_lower_bound_check(P, cube, v, SampleBudget{trial + 1u, 1 << 14, true}).holds);
  }
  CHECK_THROWS_AS(axis_sum_lower_bound_check(line_x2(), unit_square(), {vec({1, 0}), vec({0.9, 0.43})}, b), Error);
}
