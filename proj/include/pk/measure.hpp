#pragma once

// Seeded Monte Carlo volumes, signed splits and surface integrals over
// bounded regions.

#include "pk/geom.hpp"
#include "pk/polycore.hpp"

#include <functional>
#include <string>
#include <utility>
#include <variant>

namespace pk {

inline constexpr std::size_t kDefaultSamples = std::size_t{1} << 18;
inline constexpr std::size_t kDefaultLines = std::size_t{1} << 16;

struct SampleBudget {
  std::uint64_t seed = 0;
  std::size_t count = kDefaultSamples;
  bool stratified = true;

  SampleBudget with_count(std::size_t c) const {
    SampleBudget b = *this;
    b.count = c;
    return b;
  }
  SampleBudget with_seed(std::uint64_t s) const {
    SampleBudget b = *this;
    b.seed = s;
    return b;
  }
};

struct VolumeEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;
};

// Regions. A Tube region must be bounded and is the capsule around its core
// segment.
struct Box {
  Vec lo;
  Vec hi;
};

struct Ball {
  Vec center;
  double radius = 1.0;
};

using Region = std::variant<Box, Ball, Tube>;

inline Box to_box(const Cube& c) { return Box{c.lo(), c.hi()}; }

int region_dim(const Region& r);
bool region_contains(const Region& r, const Vec& x);
Box bounding_box(const Region& r);
double region_volume(const Region& r);
std::string describe(const Region& r);

/// Parameter interval {t : p + t u in region}, closed; nullopt if empty.
std::optional<std::pair<double, double>> clip_line(const Region& r, const Vec& p, const Vec& u);

/// Extent of the region's orthogonal projection in the coordinates of the
/// given orthonormal basis (columns). Returns (lo, hi) per basis vector.
std::pair<Vec, Vec> projected_extent(const Region& r, const Mat& basis);

/// Orthonormal basis of the complement of unit vector u (n x (n-1)).
Mat orthogonal_complement(const Vec& u);

/// Jittered-grid (or plain uniform) points in a box, produced in fixed-size
/// blocks so that any block can be regenerated from (seed, stream, block).
class BoxSampler {
 public:
  BoxSampler(Vec lo, Vec hi, std::size_t count, bool stratified);

  std::size_t count() const { return count_; }
  std::size_t blocks() const { return (count_ + kBlockSize - 1) / kBlockSize; }
  std::size_t block_size(std::size_t b) const { return std::min(kBlockSize, count_ - b * kBlockSize); }
  double box_volume() const { return (hi_ - lo_).prod(); }

  /// Columns are the sample points of block b.
  void block(std::size_t b, std::uint64_t seed, std::uint64_t stream, Mat& pts) const;

 private:
  Vec lo_, hi_;
  std::size_t count_;
  bool stratified_;
  std::size_t grid_ = 0;   // cells per axis
  std::size_t cells_ = 0;  // grid_^n
};

/// Monte Carlo volume of {x in [lo, hi] : inside(x)}.
VolumeEstimate estimate_volume(const std::function<bool(const Vec&)>& inside, const Vec& lo, const Vec& hi,
                               const SampleBudget& budget, std::uint64_t stream_tag = stream::kVolume);

VolumeEstimate estimate_volume(const Region& region, const SampleBudget& budget);

/// Vol{x in U : P > 0} - Vol{x in U : P < 0}. Flipping the sign of P flips
/// the result exactly.
VolumeEstimate signed_measure_split(const Surface& P, const Region& U, const SampleBudget& budget);

enum class SurfaceScheme { Slab, Lines };

struct SurfaceEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;
  std::size_t hits = 0;
};

/// f(x, N) at a surface point x with unit normal N.
using SurfaceFunction = std::function<double(const Vec&, const Vec&)>;

/// Integral of f over Z inside U. Slab: coarea over a slab of half-width
/// 1e-3 diam(U) with Newton projection onto Z. Lines: Crofton average over
/// random lines of the sum of f at the hit points.
SurfaceEstimate surface_integral(const Surface& Z, const Region& U, const SurfaceFunction& f,
                                 const SampleBudget& budget, SurfaceScheme scheme = SurfaceScheme::Slab);

/// E|u . e| for u uniform on the sphere S^{n-1}.
double mean_abs_projection(int n);

}  // namespace pk
