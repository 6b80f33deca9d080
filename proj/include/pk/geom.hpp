#pragma once

// Tubes, lattice cubes, ellipsoids and sampled convex bodies.

#include "pk/common.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <limits>
#include <optional>
#include <vector>

namespace pk {

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

/// Solid cylinder of the given radius around a core. A bounded tube is the
/// radius-neighbourhood of the core segment of the given length centred at
/// core_point; an unbounded tube surrounds the whole core line.
struct Tube {
  Vec core_point;
  Vec direction;  // unit
  double radius = 1.0;
  double length = kUnbounded;
  int family = 0;

  int dim() const { return static_cast<int>(core_point.size()); }
  bool bounded() const { return std::isfinite(length); }
  Vec start() const { return core_point - 0.5 * length * direction; }
  Vec end() const { return core_point + 0.5 * length * direction; }

  double distance_to_core(const Vec& x) const;
  bool contains(const Vec& x) const { return distance_to_core(x) <= radius; }
};

/// Validating constructor: normalizes nothing, rejects non-unit directions.
Tube make_tube(Vec core_point, Vec direction, double radius = 1.0, double length = kUnbounded, int family = 0);

/// Axis-aligned cube [min_corner, min_corner + side]^n.
struct Cube {
  Eigen::VectorXi min_corner;
  double side = 1.0;

  int dim() const { return static_cast<int>(min_corner.size()); }
  Vec lo() const { return min_corner.cast<double>(); }
  Vec hi() const { return lo().array() + side; }
  Vec center() const { return lo().array() + 0.5 * side; }
  double volume() const { return std::pow(side, dim()); }
};

/// The unit cubes tiling a scene cube.
class CubeLattice {
 public:
  CubeLattice(Eigen::VectorXi origin, int cells_per_axis);
  static CubeLattice covering(const Cube& scene);

  int dim() const { return static_cast<int>(origin_.size()); }
  int cells_per_axis() const { return cells_; }
  std::size_t size() const { return size_; }

  Eigen::VectorXi cell(std::size_t k) const;
  std::size_t index(const Eigen::VectorXi& cell) const;
  Cube cube(std::size_t k) const { return Cube{cell(k), 1.0}; }
  Cube scene() const { return Cube{origin_, static_cast<double>(cells_)}; }

 private:
  Eigen::VectorXi origin_;
  int cells_;
  std::size_t size_;
};

/// Clips the core to the scene cube grown by the tube radius. nullopt when
/// the tube misses it.
std::optional<Tube> clip_to_cube(const Tube& tube, const Cube& scene);

/// Euclidean distance between segment [a, b] and the box [lo, hi].
double segment_box_distance(const Vec& a, const Vec& b, const Vec& lo, const Vec& hi);

/// Interior: the open cube meets the open tube (segment-to-box distance
/// < r - 1e-9). Closed: the closed bodies touch (distance <= r + 1e-9).
enum class Contact { Interior, Closed };

/// Sorted linear indices of lattice cubes hit by the tube, which must be
/// bounded (clipped).
std::vector<std::size_t> cubes_hit_by_tube(const Tube& tube, const CubeLattice& lattice,
                                           Contact contact = Contact::Interior);

struct DeterminantBound {
  double theta = 0.0;
  bool exhaustive = true;  // false: sampled lower-confidence estimate
  std::size_t tuples = 0;
};

/// min |det(v_1, ..., v_n)| over one vector from each family.
DeterminantBound min_determinant(const std::vector<std::vector<Vec>>& families, std::uint64_t seed = 0);

/// Origin-centred ellipsoid {v : v^T Q v <= 1}.
template <class Scalar>
class BasicEllipsoid {
 public:
  using Matrix = MatrixX<Scalar>;
  using Vector = VectorX<Scalar>;

  BasicEllipsoid() = default;
  explicit BasicEllipsoid(Matrix q) : q_(std::move(q)) {
    if (q_.rows() != q_.cols()) throw Error(ErrorKind::ValidationError, "ellipsoid form must be square");
    if ((q_ - q_.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-10) * std::max(Scalar(1), q_.cwiseAbs().maxCoeff()))
      throw Error(ErrorKind::ValidationError, "ellipsoid form must be symmetric");
    q_ = (q_ + q_.transpose()) / Scalar(2);
    Eigen::SelfAdjointEigenSolver<Matrix> es(q_, Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues().minCoeff() > Scalar(0)))
      throw Error(ErrorKind::ValidationError, "ellipsoid form must be positive definite");
  }

  static BasicEllipsoid ball(int n, Scalar radius = Scalar(1)) {
    return BasicEllipsoid(Matrix::Identity(n, n) / (radius * radius));
  }

  static BasicEllipsoid axes(const Vector& semi_axes) {
    return BasicEllipsoid(Matrix(semi_axes.array().square().inverse().matrix().asDiagonal()));
  }

  int dim() const { return static_cast<int>(q_.rows()); }
  const Matrix& form() const { return q_; }

  Scalar volume() const { return Scalar(unit_ball_volume(dim())) / std::sqrt(q_.determinant()); }

  template <class Derived>
  bool contains(const Eigen::MatrixBase<Derived>& v, Scalar slack = Scalar(0)) const {
    return v.dot(q_ * v) <= (Scalar(1) + slack) * (Scalar(1) + slack);
  }

  /// Distance from the origin to the boundary along u.
  template <class Derived>
  Scalar radial(const Eigen::MatrixBase<Derived>& u) const {
    return std::sqrt(u.squaredNorm() / u.dot(q_ * u));
  }

  /// max_{v in E} w . v
  template <class Derived>
  Scalar support(const Eigen::MatrixBase<Derived>& w) const {
    return std::sqrt(w.dot(q_.ldlt().solve(Vector(w))));
  }

  /// D * E
  BasicEllipsoid scaled(Scalar factor) const { return BasicEllipsoid(q_ / (factor * factor)); }

  /// M(E) = {M v : v in E}
  BasicEllipsoid transformed(const Matrix& m) const {
    const Matrix inv = m.inverse();
    return BasicEllipsoid(inv.transpose() * q_ * inv);
  }

 private:
  Matrix q_;
};

using Ellipsoid = BasicEllipsoid<double>;

/// Least log D with (1/D) E1 in E2 in D E1: half the largest |log| of the
/// generalized eigenvalues of (Q1, Q2).
template <class Scalar>
Scalar ellipsoid_distance(const BasicEllipsoid<Scalar>& e1, const BasicEllipsoid<Scalar>& e2) {
  // Solve in a canonical argument order so the result is exactly symmetric.
  const auto& f1 = e1.form();
  const auto& f2 = e2.form();
  const bool swap = std::lexicographical_compare(f2.data(), f2.data() + f2.size(), f1.data(), f1.data() + f1.size());
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixX<Scalar>> ges(swap ? f2 : f1, swap ? f1 : f2, Eigen::EigenvaluesOnly);
  const auto& lam = ges.eigenvalues();
  Scalar worst(0);
  for (Eigen::Index i = 0; i < lam.size(); ++i) worst = std::max(worst, std::abs(std::log(lam[i])));
  return worst / Scalar(2);
}

/// A star body sampled by its radial function on unit directions (columns).
struct ConvexBodySample {
  Mat directions;  // n x k
  Vec radial;      // k

  int dim() const { return static_cast<int>(directions.rows()); }
  std::size_t size() const { return static_cast<std::size_t>(directions.cols()); }

  Vec boundary_point(std::size_t i) const {
    return radial[static_cast<Eigen::Index>(i)] * directions.col(static_cast<Eigen::Index>(i));
  }

  /// omega_n * mean(rho^n): the polar-coordinates volume formula.
  double volume() const;

  /// Support function of the symmetric hull of the boundary samples.
  double support(const Vec& w) const;

  /// Radial function at an arbitrary unit direction. In the plane this is
  /// the boundary polygon through the samples; otherwise the nearest sample.
  double radial_at(const Vec& u) const;

  bool contains(const Vec& x, double slack = 0.0) const;
};

/// Unit directions as antipodal pairs: column i + k/2 is minus column i.
/// Equally spaced angles in the plane, seeded uniform samples otherwise.
Mat sphere_directions(int n, std::size_t k, std::uint64_t seed = 0);

/// 512 for n <= 3, 4096 for n = 4 and above.
std::size_t default_direction_count(int n);

struct JohnResult {
  Ellipsoid ellipsoid;
  bool degenerate = false;
  int iterations = 0;
};

/// Maximum-volume ellipsoid inscribed in the symmetric hull of the body
/// samples. Computed as the polar of the minimum-volume ellipsoid enclosing
/// the polar body (Khachiyan barycentric updates), so that E is inside the
/// hull and the hull is inside sqrt(n) E.
JohnResult john_inner_ellipsoid(const ConvexBodySample& body, double tol = 1e-4);

}  // namespace pk
