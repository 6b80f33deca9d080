#pragma once

// Directed volume V(v) = integral over Z of |v . N|, by the surface integral
// and by counting intersections along fibers parallel to v.

#include "pk/measure.hpp"

namespace pk {

struct DirectedVolume {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t fibers = 0;
  std::size_t contained = 0;  // fibers lying inside Z
};

/// Fibers parallel to v through stratified points of the region's shadow on
/// v-perp; each contributes its number of distinct intersections with Z
/// inside the closed region. Scaled by |v|. Lines inside Z count as the
/// factor degree when they exceed 0.1% of fibers and are dropped otherwise.
/// budget.count is the number of fibers. Fibers of different directions
/// share one random stream.
DirectedVolume directed_volume_fiber(const Surface& Z, const Region& region, const Vec& v, const SampleBudget& budget);

/// Integral of |v . N| over Z inside the region.
DirectedVolume directed_volume_surface(const Surface& Z, const Region& region, const Vec& v, const SampleBudget& budget,
                                       SurfaceScheme scheme = SurfaceScheme::Slab);

/// omega_{n-1} r^{n-1} d: bound for V(core direction) of a degree-d surface
/// inside a radius-r cylinder.
double cylinder_bound(int n, double r, int d);

struct AxisSumReport {
  double volume = 0.0;
  double volume_error = 0.0;
  double axis_sum = 0.0;
  double axis_sum_error = 0.0;
  bool holds = false;  // volume <= 2 axis_sum + 3 combined std error
};

/// Compares Vol(Z inside region) with 2 * sum_j V(v_j) for directions
/// within 1/(100 n) of the coordinate axes.
AxisSumReport axis_sum_lower_bound_check(const Surface& Z, const Region& region, const std::vector<Vec>& v,
                                         const SampleBudget& budget);

}  // namespace pk
