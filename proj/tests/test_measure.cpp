#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "pk/measure.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace pk;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Box unit_box(int n) { return Box{Vec::Zero(n), Vec::Ones(n)}; }

Poly circle(double r2) { return Poly::from_terms(2, 2, {{{2, 0}, 1.0}, {{0, 2}, 1.0}, {{0, 0}, -r2}}); }

double one(const Vec&, const Vec&) { return 1.0; }

// Composite Simpson rule.
template <class F>
double simpson(F f, double a, double b, int m = 2000) {
  const double h = (b - a) / m;
  double s = f(a) + f(b);
  for (int i = 1; i < m; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("region geometry") {
  const Region box = Box{vec({0, 0}), vec({2, 1})};
  const Region ball = Ball{vec({1, 1}), 0.5};
  const Region cap = make_tube(vec({0, 0}), vec({1, 0}), 1.0, 2.0);
  CHECK(region_volume(box) == doctest::Approx(2.0));
  CHECK(region_volume(ball) == doctest::Approx(std::numbers::pi / 4));
  CHECK(region_volume(cap) == doctest::Approx(4.0 + std::numbers::pi));
  CHECK(region_contains(cap, vec({1.9, 0.4})));
  CHECK_FALSE(region_contains(cap, vec({1.9, 0.9})));
  const auto seg = clip_line(box, vec({-1, 0.5}), vec({1, 0}));
  REQUIRE(seg);
  CHECK(seg->first == doctest::Approx(1.0));
  CHECK(seg->second == doctest::Approx(3.0));
  const auto chord = clip_line(ball, vec({1, 0}), vec({0, 1}));
  REQUIRE(chord);
  CHECK(chord->second - chord->first == doctest::Approx(1.0));
  CHECK_FALSE(clip_line(ball, vec({3, 0}), vec({0, 1})));
  // capsule along its axis: from one cap tip to the other
  const auto axial = clip_line(cap, vec({0, 0}), vec({1, 0}));
  REQUIRE(axial);
  CHECK(axial->first == doctest::Approx(-2.0));
  CHECK(axial->second == doctest::Approx(2.0));
  const auto across = clip_line(cap, vec({0.5, -5}), vec({0, 1}));
  REQUIRE(across);
  CHECK(across->second - across->first == doctest::Approx(2.0));
  const Box bb = bounding_box(cap);
  CHECK(bb.lo[0] == doctest::Approx(-2.0));
  CHECK(bb.hi[1] == doctest::Approx(1.0));
  CHECK_THROWS_AS(region_volume(Region(make_tube(vec({0, 0}), vec({1, 0})))), Error);
}

TEST_CASE("clipped chords agree with membership") {
  std::mt19937_64 eng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const std::vector<Region> regions{Box{vec({-1, -0.5, 0}), vec({1, 1, 0.7})}, Ball{vec({0.2, 0, -0.1}), 1.1},
                                    make_tube(vec({0, 0, 0}), vec({0, 0.6, 0.8}), 0.6, 1.5)};
  for (const auto& r : regions)
    for (int trial = 0; trial < 50; ++trial) {
      const Vec p = vec({u(eng), u(eng), u(eng)});
      const Vec d = random_unit_vector(3, eng);
      const auto seg = clip_line(r, p, d);
      for (int i = 0; i <= 400; ++i) {
        const double t = -6.0 + 12.0 * i / 400.0;
        const bool in = region_contains(r, p + t * d);
        const bool in_seg = seg && t >= seg->first - 1e-9 && t <= seg->second + 1e-9;
        if (in) CHECK(in_seg);
        if (seg && t > seg->first + 1e-6 && t < seg->second - 1e-6) CHECK(in);
      }
    }
}

TEST_CASE("projected extents bound the projected region") {
  std::mt19937_64 eng(4);
  const std::vector<Region> regions{Box{vec({-1, -0.5, 0}), vec({1, 1, 0.7})}, Ball{vec({0.2, 0, -0.1}), 1.1},
                                    make_tube(vec({0, 0, 0}), vec({0, 0.6, 0.8}), 0.6, 1.5)};
  for (const auto& r : regions)
    for (int trial = 0; trial < 10; ++trial) {
      const Vec u = random_unit_vector(3, eng);
      const Mat basis = orthogonal_complement(u);
      CHECK((basis.transpose() * u).norm() < 1e-12);
      CHECK((basis.transpose() * basis - Mat::Identity(2, 2)).norm() < 1e-12);
      const auto [lo, hi] = projected_extent(r, basis);
      const Box bb = bounding_box(r);
      std::uniform_real_distribution<double> w(0.0, 1.0);
      for (int s = 0; s < 2000; ++s) {
        Vec x(3);
        for (int i = 0; i < 3; ++i) x[i] = bb.lo[i] + (bb.hi[i] - bb.lo[i]) * w(eng);
        if (!region_contains(r, x)) continue;
        const Vec y = basis.transpose() * x;
        CHECK((y.array() >= lo.array() - 1e-12).all());
        CHECK((y.array() <= hi.array() + 1e-12).all());
      }
    }
}

TEST_CASE("stratified sampler fills its box") {
  const BoxSampler s(vec({0, 0}), vec({2, 1}), 10000, true);
  CHECK(s.blocks() == 3);
  Mat pts;
  std::size_t total = 0;
  double mean_x = 0.0;
  for (std::size_t b = 0; b < s.blocks(); ++b) {
    s.block(b, 1, stream::kVolume, pts);
    total += static_cast<std::size_t>(pts.cols());
    CHECK((pts.row(0).array() >= 0).all());
    CHECK((pts.row(0).array() <= 2).all());
    mean_x += pts.row(0).sum();
  }
  CHECK(total == 10000);
  CHECK(mean_x / 10000 == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("volume of the unit disk") {
  const auto est = estimate_volume(Ball{vec({0, 0}), 1.0}, SampleBudget{1, 1000000, true});
  CHECK(est.count == 1000000);
  CHECK(std::abs(est.value - std::numbers::pi) <= 3 * est.std_error);
  const auto plain = estimate_volume(Ball{vec({0, 0}), 1.0}, SampleBudget{1, 1000000, false});
  CHECK(std::abs(plain.value - std::numbers::pi) <= 3 * plain.std_error);
}

TEST_CASE("half of a cube") {
  for (int n : {2, 3}) {
    const Box b = unit_box(n);
    const auto est = estimate_volume([](const Vec& x) { return x[0] > 0.5; }, b.lo, b.hi, SampleBudget{2});
    CHECK(std::abs(est.value - 0.5) <= 3 * est.std_error + 1e-12);
  }
}

TEST_CASE("outside a radius one half disk") {
  const Poly P = circle(0.25);
  const auto est = estimate_volume([&](const Vec& x) { return P(x) > 0; }, vec({-1, -1}), vec({1, 1}), SampleBudget{3});
  CHECK(std::abs(est.value - (4.0 - std::numbers::pi / 4)) <= 3 * est.std_error);
}

TEST_CASE("volumes add over disjoint regions") {
  const SampleBudget b{4};
  const auto left = estimate_volume([](const Vec& x) { return x.norm() <= 1 && x[0] < 0; }, vec({-1, -1}), vec({1, 1}), b);
  const auto right = estimate_volume([](const Vec& x) { return x.norm() <= 1 && x[0] >= 0; }, vec({-1, -1}), vec({1, 1}), b.with_seed(5));
  const auto whole = estimate_volume([](const Vec& x) { return x.norm() <= 1; }, vec({-1, -1}), vec({1, 1}), b.with_seed(6));
  const double err = std::sqrt(left.std_error * left.std_error + right.std_error * right.std_error +
                               whole.std_error * whole.std_error);
  CHECK(std::abs(left.value + right.value - whole.value) <= 3 * err);
}

TEST_CASE("signed split examples") {
  const Region ball = Ball{vec({0, 0}), 1.0};
  const double vol = std::numbers::pi;
  const SampleBudget b{7};
  const auto odd = signed_measure_split(Surface(Poly::linear(vec({1, 0}), 0.0)), ball, b);
  CHECK(std::abs(odd.value) <= 3 * odd.std_error + 1e-3);
  const auto pos = signed_measure_split(Surface(Poly(2, 0, Vec::Ones(1))), ball, b);
  CHECK(std::abs(pos.value - vol) <= 3 * estimate_volume(ball, b).std_error + 1e-12);
  const auto neg = signed_measure_split(Surface(Poly::linear(vec({1, 0}), -2.0)), ball, b);
  CHECK(neg.value == -pos.value);
}

TEST_CASE("signed split flips exactly under negation") {
  std::mt19937_64 eng(8);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 10; ++trial) {
    Vec c(6);
    for (auto& v : c) v = g(eng);
    const Poly P(2, 2, c);
    const Region U = Box{vec({-1, -1}), vec({1, 1})};
    const SampleBudget b{static_cast<std::uint64_t>(trial), 1 << 14};
    CHECK(signed_measure_split(Surface(-P), U, b).value == -signed_measure_split(Surface(P), U, b).value);
  }
}

TEST_CASE("signed split is continuous in the coefficients") {
  std::mt19937_64 eng(9);
  std::normal_distribution<double> g;
  for (int seq = 0; seq < 5; ++seq) {
    Vec c(6), dir(6);
    for (auto& v : c) v = g(eng);
    for (auto& v : dir) v = g(eng);
    const Region U = Ball{vec({0, 0}), 1.0};
    const SampleBudget b{11};
    const double base = signed_measure_split(Surface(Poly(2, 2, c)), U, b).value;
    double prev_gap = 1e300;
    for (double h : {1e-1, 1e-2, 1e-3, 1e-4}) {
      const double gap = std::abs(signed_measure_split(Surface(Poly(2, 2, Vec(c + h * dir))), U, b).value - base);
      CHECK(gap <= prev_gap + 1e-3);
      prev_gap = gap;
    }
    CHECK(prev_gap < 0.01);
  }
}

TEST_CASE("results do not depend on the worker count") {
  const Region U = Ball{vec({0, 0, 0}), 1.0};
  const Poly P = Poly::linear(vec({1, 2, -1}), 0.3);
  set_max_threads(1);
  const auto a = signed_measure_split(Surface(P), U, SampleBudget{21});
  const auto va = estimate_volume(U, SampleBudget{21});
  const auto sa = surface_integral(Surface(P), U, one, SampleBudget{21, 1 << 14}, SurfaceScheme::Lines);
  set_max_threads(4);
  const auto b = signed_measure_split(Surface(P), U, SampleBudget{21});
  const auto vb = estimate_volume(U, SampleBudget{21});
  const auto sb = surface_integral(Surface(P), U, one, SampleBudget{21, 1 << 14}, SurfaceScheme::Lines);
  set_max_threads(0);
  CHECK(a.value == b.value);
  CHECK(va.value == vb.value);
  CHECK(sa.value == sb.value);
  CHECK(sa.std_error == sb.std_error);
}

TEST_CASE("length of a unit segment on the boundary") {
  const Surface Z(Poly::linear(vec({0, 1}), 0.0));
  const Region U = unit_box(2);
  const auto lines = surface_integral(Z, U, one, SampleBudget{1, kDefaultLines}, SurfaceScheme::Lines);
  CHECK(lines.value == doctest::Approx(1.0).epsilon(0.02));
  const auto slab = surface_integral(Z, U, one, SampleBudget{1, 1 << 22}, SurfaceScheme::Slab);
  CHECK(slab.value == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("circumference of the unit circle") {
  const Surface Z(circle(1.0));
  const Region U = Box{vec({-2, -2}), vec({2, 2})};
  const auto lines = surface_integral(Z, U, one, SampleBudget{2, kDefaultLines}, SurfaceScheme::Lines);
  CHECK(lines.value == doctest::Approx(2 * std::numbers::pi).epsilon(0.02));
  const auto slab = surface_integral(Z, U, one, SampleBudget{2, 1 << 22}, SurfaceScheme::Slab);
  CHECK(slab.value == doctest::Approx(2 * std::numbers::pi).epsilon(0.02));
  CHECK(std::abs(lines.value - slab.value) <= 0.05 * slab.value);
}

TEST_CASE("arc length of a parabola") {
  const Surface Z(Poly::from_terms(2, 2, {{{0, 1}, 1.0}, {{2, 0}, -1.0}}));
  const Region U = unit_box(2);
  const double expect = simpson([](double t) { return std::sqrt(1 + 4 * t * t); }, 0.0, 1.0);
  CHECK(expect == doctest::Approx(1.4789).epsilon(1e-4));
  const auto lines = surface_integral(Z, U, one, SampleBudget{3, kDefaultLines}, SurfaceScheme::Lines);
  CHECK(lines.value == doctest::Approx(expect).epsilon(0.02));
  const auto slab = surface_integral(Z, U, one, SampleBudget{3, 1 << 22}, SurfaceScheme::Slab);
  CHECK(slab.value == doctest::Approx(expect).epsilon(0.02));
}

TEST_CASE("area of a sphere patch") {
  // unit sphere inside the cube [-2,2]^3: area 4 pi
  const Surface Z(Poly::from_terms(3, 2, {{{2, 0, 0}, 1.0}, {{0, 2, 0}, 1.0}, {{0, 0, 2}, 1.0}, {{0, 0, 0}, -1.0}}));
  const Region U = Box{Vec::Constant(3, -2.0), Vec::Constant(3, 2.0)};
  const auto lines = surface_integral(Z, U, one, SampleBudget{4, kDefaultLines}, SurfaceScheme::Lines);
  CHECK(lines.value == doctest::Approx(4 * std::numbers::pi).epsilon(0.02));
}

TEST_CASE("singular surfaces are reported") {
  const Surface Z(Poly::from_terms(2, 2, {{{0, 2}, 1.0}}));  // double line x2^2
  const Region U = Box{vec({0, -0.5}), vec({1, 0.5})};
  try {
    surface_integral(Z, U, one, SampleBudget{5, 1 << 16}, SurfaceScheme::Slab);
    FAIL("expected a singular surface");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SingularSurface);
  }
}

TEST_CASE("projection constant") {
  CHECK(mean_abs_projection(2) == doctest::Approx(2 / std::numbers::pi));
  CHECK(mean_abs_projection(3) == doctest::Approx(0.5));
}
