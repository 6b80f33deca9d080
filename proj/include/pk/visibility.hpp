#pragma once

// Visibility bodies {v : |v| <= 1, V(v) <= 1}, mollified directed volumes,
// hyperplane arrangements and the search for surfaces of large visibility.

#include "pk/dirvol.hpp"

namespace pk {

struct MollifiedQuery {
  double epsilon = 1e-3;
  int k = 16;
};

struct VisibilityOptions {
  std::size_t directions = 0;  // 0: default_direction_count(n)
  std::optional<MollifiedQuery> mollify;
  bool john = true;
};

struct VisibilityReport {
  ConvexBodySample body;
  Vec directed;  // V(u) per body direction
  double volume = 0.0;
  double vis = 0.0;
  Ellipsoid john;
  bool john_degenerate = false;
};

/// Body with radial function min(1, 1/V(u)) on the given unit directions.
VisibilityReport visibility_from_directed(const Mat& directions, const Vec& directed, bool john = true);

/// Visibility of Z inside U. budget.count is the number of fibers per
/// direction; every direction reuses the same fiber stream.
VisibilityReport visibility(const Surface& Z, const Region& U, const SampleBudget& budget,
                            const VisibilityOptions& options = {});

/// k perturbations of Z: every factor independently becomes
/// normalize(F + eps xi) with xi uniform on the unit sphere tangent to F.
std::vector<Surface> mollified_ensemble(const Surface& Z, const MollifiedQuery& m, std::uint64_t seed);

/// Average of directed_volume_fiber over the mollified ensemble.
DirectedVolume mollified_directed_volume(const Surface& Z, const Region& U, const Vec& v, const MollifiedQuery& m,
                                         const SampleBudget& budget);

// Hyperplane arrangements: products of linear factors. Their directed
// volume is sum_i |u . N_i| area(H_i inside U), so only section areas
// are needed.

struct Hyperplane {
  Vec normal;  // unit
  double offset = 0.0;  // normal . x + offset = 0
};

using Arrangement = std::vector<Hyperplane>;

Hyperplane hyperplane_through(const Vec& point, const Vec& normal);
Surface to_surface(const Arrangement& arrangement);

/// (n-1)-volume of H inside the region. Exact for balls, axis-aligned planes
/// in boxes, and boxes and tubes in the plane; otherwise a fiber estimate
/// along the normal.
double section_volume(const Hyperplane& h, const Region& region, const SampleBudget& budget);

/// V(u) for every column u of the direction matrix.
Vec arrangement_directed(const Arrangement& arrangement, const Region& region, const Mat& directions,
                         const SampleBudget& budget);

struct VisibilityTarget {
  Region region;
  double M = 1.0;
};

struct SearchOptions {
  int d_cap = 0;            // 0: twice the starting degree
  bool sweep = true;        // start at ceil((sum M)^(1/n)) and double up to d_cap
  int restarts = 4;
  int iterations = 0;       // per restart; 0: 60 d + 200
  std::size_t directions = 128;
  bool shrink = false;      // after success, lower the degree while a repaired search still succeeds
  bool validate = true;     // recompute the winner's visibility with mollification
  MollifiedQuery mollify;
  std::size_t validate_fibers = 512;
  std::size_t validate_directions = 0;  // 0: default_direction_count(n)
};

struct TargetRow {
  double target = 0.0;
  double achieved = 0.0;   // exact arrangement visibility used by the search
  double ratio = 0.0;
  double validated = 0.0;  // mollified fiber visibility, 0 when not validated
};

struct SearchResult {
  Arrangement arrangement;
  Surface Z;
  int degree = 0;
  std::vector<TargetRow> table;
  double min_ratio = 0.0;
  bool success = false;
  std::vector<int> degrees_tried;
};

/// Stochastic search over arrangements of d hyperplanes maximizing
/// min_k vis(Z inside U_k) / M_k. Returns the best arrangement found and
/// its table; success means every ratio is at least 1.
SearchResult find_high_visibility_surface(const std::vector<VisibilityTarget>& targets, const SearchOptions& options,
                                          const SampleBudget& budget);

}  // namespace pk
