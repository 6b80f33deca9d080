#pragma once

// Box fields for unions of tubes: a ball cover of X, a high-visibility
// arrangement on the cover, per-point boxes B(x) = x + L K(x) from the
// visibility body K(x) of Z inside B(x, 1), and tube containment.

#include "pk/visibility.hpp"

namespace pk {

/// Union of bounded tubes of one dimension.
using TubeUnion = std::vector<Tube>;

bool union_contains(const TubeUnion& X, const Vec& x);
Box union_bounding_box(const TubeUnion& X);
VolumeEstimate union_volume(const TubeUnion& X, const SampleBudget& budget);

/// Greedy maximal packing of disjoint radius-r balls centred in X, drawn from
/// candidate grid points of the given spacing in grid order. Centres are at
/// least 2r apart and every candidate lies within 2r of a centre, so the
/// dilates 3 B_i cover X once spacing sqrt(n) / 2 <= r.
std::vector<Ball> ball_cover(const TubeUnion& X, double radius = 0.1, double spacing = 0.05);

/// Fraction of sampled points of X inside some dilate factor * B_i.
double cover_fraction(const TubeUnion& X, const std::vector<Ball>& cover, const SampleBudget& budget,
                      double factor = 3.0);

struct BoxFieldOptions {
  double degree_factor = 4.0;  // degree d = ceil(degree_factor L)
  double target_radius = 0.7;  // B(c_i, 0.7) lies in B(x, 1) for every x in 3 B_i
  std::size_t directions = 512;
  bool shrink = true;          // lower the degree below the cap while the targets still hold
  SearchOptions search;        // d_cap, sweep and shrink are set from the fields above
  double slack = 0.02;         // relative slack of the containment test
};

class BoxField {
 public:
  int n = 2;
  double L = 1.0;
  double volume_X = 0.0;
  bool trivial = false;  // side-L cubes
  Arrangement arrangement;
  SearchResult search;
  Mat directions;  // antipodal unit directions of the body samples
  double slack = 0.02;

  /// B(x) - x sampled on the field's directions.
  ConvexBodySample body(const Vec& x) const;
  double volume(const Vec& x) const { return body(x).volume(); }

  /// Least sigma with T inside sigma B(x), tested on the sampled directions:
  /// max(e_+ . u, e_- . u) + r <= sigma h(u) (1 + slack), e_+- the core
  /// endpoints minus x and h the support of B(x) - x.
  double required_sigma(const Tube& T, const Vec& x) const;
  bool contains(const Tube& T, const Vec& x, double sigma) const { return required_sigma(T, x) <= sigma; }
};

/// Side-L cubes when Vol(X) > L^n / 2; otherwise Z is the arrangement found
/// for targets M = L^n / Vol(X) on the balls B(c_i, target_radius). Throws
/// ValidationError for L <= 1 and Stalled when the search misses a target.
BoxField build_box_field(const TubeUnion& X, double L, const SampleBudget& budget, const BoxFieldOptions& options = {});

/// required_sigma at budget.count uniform points of T.
std::vector<double> required_sigmas(const Tube& T, const BoxField& field, const SampleBudget& budget);

/// Fraction of budget.count uniform points x of T with T inside sigma B(x).
double containment_probability(const Tube& T, const BoxField& field, double sigma, const SampleBudget& budget);

struct SigmaLaw {
  std::vector<double> sigma;
  std::vector<double> failure;  // 1 - containment fraction
  double exponent = 0.0;        // least-squares slope of log failure on log sigma
  std::size_t fitted = 0;       // points with failure > 0 used by the fit
  double sigma_nine_tenths = kUnbounded;  // least sigma with containment >= 0.9
};

/// Failure fractions over all tubes' pooled sample points for each sigma,
/// their power-law fit, and the sigma reaching 9/10 containment.
SigmaLaw sigma_law(const TubeUnion& tubes, const BoxField& field, const std::vector<double>& sigmas,
                   const SampleBudget& budget);

struct Lemma71Average {
  double average = 0.0;
  double std_error = 0.0;
  double comparison = 0.0;  // omega_n cylinder_bound(n, 3r, d) / |T|
};

/// Mean over `points` uniform x in T of directed_volume_fiber(Z, B(x, 1), v)
/// with v the core direction of T and budget.count fibers per ball.
Lemma71Average lemma71_average(const Tube& T, const Surface& Z, const SampleBudget& budget, std::size_t points = 256);

/// Uniform point of the capsule T.
Vec sample_in_tube(const Tube& T, Engine& eng);

/// |T| for a capsule.
double tube_volume(const Tube& T);

}  // namespace pk
