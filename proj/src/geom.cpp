#include "pk/geom.hpp"

#include <algorithm>
#include <numbers>

namespace pk {

double Tube::distance_to_core(const Vec& x) const {
  const Vec rel = x - core_point;
  double t = rel.dot(direction);
  if (bounded()) t = std::clamp(t, -0.5 * length, 0.5 * length);
  return (rel - t * direction).norm();
}

Tube make_tube(Vec core_point, Vec direction, double radius, double length, int family) {
  if (core_point.size() != direction.size() || core_point.size() < 1)
    throw Error(ErrorKind::ValidationError, "tube core point and direction dimensions differ");
  if (std::abs(direction.norm() - 1.0) > 1e-9) throw Error(ErrorKind::ValidationError, "tube direction must be a unit vector");
  if (!(radius > 0.0)) throw Error(ErrorKind::ValidationError, "tube radius must be positive");
  if (!(length > 0.0)) throw Error(ErrorKind::ValidationError, "tube length must be positive");
  return Tube{std::move(core_point), std::move(direction), radius, length, family};
}

CubeLattice::CubeLattice(Eigen::VectorXi origin, int cells_per_axis) : origin_(std::move(origin)), cells_(cells_per_axis) {
  if (origin_.size() < 1 || cells_ < 1) throw Error(ErrorKind::ValidationError, "lattice needs n >= 1 and a positive side");
  size_ = 1;
  for (Eigen::Index i = 0; i < origin_.size(); ++i) size_ *= static_cast<std::size_t>(cells_);
}

CubeLattice CubeLattice::covering(const Cube& scene) {
  const int side = static_cast<int>(std::lround(scene.side));
  if (std::abs(scene.side - side) > 1e-9) throw Error(ErrorKind::ValidationError, "scene side must be an integer");
  return CubeLattice(scene.min_corner, side);
}

Eigen::VectorXi CubeLattice::cell(std::size_t k) const {
  Eigen::VectorXi c(origin_.size());
  for (Eigen::Index i = 0; i < origin_.size(); ++i) {
    c[i] = origin_[i] + static_cast<int>(k % static_cast<std::size_t>(cells_));
    k /= static_cast<std::size_t>(cells_);
  }
  return c;
}

std::size_t CubeLattice::index(const Eigen::VectorXi& c) const {
  std::size_t k = 0;
  for (Eigen::Index i = origin_.size() - 1; i >= 0; --i) {
    const int off = c[i] - origin_[i];
    if (off < 0 || off >= cells_) throw Error(ErrorKind::ValidationError, "cell outside the lattice");
    k = k * static_cast<std::size_t>(cells_) + static_cast<std::size_t>(off);
  }
  return k;
}

std::optional<Tube> clip_to_cube(const Tube& tube, const Cube& scene) {
  const Vec lo = scene.lo().array() - tube.radius;
  const Vec hi = scene.hi().array() + tube.radius;
  double t0 = tube.bounded() ? -0.5 * tube.length : -kUnbounded;
  double t1 = tube.bounded() ? 0.5 * tube.length : kUnbounded;
  for (int i = 0; i < tube.dim(); ++i) {
    const double p = tube.core_point[i];
    const double u = tube.direction[i];
    if (std::abs(u) < 1e-15) {
      if (p < lo[i] || p > hi[i]) return std::nullopt;
      continue;
    }
    double a = (lo[i] - p) / u;
    double b = (hi[i] - p) / u;
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
  }
  if (!(t1 > t0)) return std::nullopt;
  Tube out = tube;
  out.core_point = tube.core_point + 0.5 * (t0 + t1) * tube.direction;
  out.length = t1 - t0;
  return out;
}

double segment_box_distance(const Vec& a, const Vec& b, const Vec& lo, const Vec& hi) {
  // f(t) = dist(a + t (b - a), box)^2 is convex and piecewise quadratic with
  // breaks where a coordinate crosses a face; minimize on each piece.
  const Vec d = b - a;
  const Eigen::Index n = a.size();
  std::vector<double> cuts{0.0, 1.0};
  for (Eigen::Index i = 0; i < n; ++i) {
    if (d[i] == 0.0) continue;
    for (double face : {lo[i], hi[i]}) {
      const double t = (face - a[i]) / d[i];
      if (t > 0.0 && t < 1.0) cuts.push_back(t);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  double best = kUnbounded;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double s0 = cuts[k], s1 = cuts[k + 1];
    const double mid = 0.5 * (s0 + s1);
    double A = 0.0, B = 0.0, C = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double x = a[i] + mid * d[i];
      double target;
      if (x < lo[i]) target = lo[i];
      else if (x > hi[i]) target = hi[i];
      else continue;
      // (d t - (target - a))^2
      const double r = target - a[i];
      A += d[i] * d[i];
      B -= 2.0 * d[i] * r;
      C += r * r;
    }
    auto f = [&](double t) { return (A * t + B) * t + C; };
    double v = std::min(f(s0), f(s1));
    if (A > 0.0) {
      const double t = std::clamp(-B / (2.0 * A), s0, s1);
      v = std::min(v, f(t));
    }
    best = std::min(best, v);
  }
  return std::sqrt(std::max(0.0, best));
}

std::vector<std::size_t> cubes_hit_by_tube(const Tube& tube, const CubeLattice& lattice, Contact contact) {
  if (!tube.bounded()) throw Error(ErrorKind::ValidationError, "cube hits need a clipped (bounded) tube");
  if (tube.dim() != lattice.dim()) throw Error(ErrorKind::ValidationError, "tube and lattice dimensions differ");
  const int n = tube.dim();
  const Vec a = tube.start();
  const Vec b = tube.end();
  const Cube scene = lattice.scene();
  Eigen::VectorXi first(n), last(n);
  for (int i = 0; i < n; ++i) {
    const double lo = std::min(a[i], b[i]) - tube.radius;
    const double hi = std::max(a[i], b[i]) + tube.radius;
    // one spare cell each side so touching cubes are examined too
    first[i] = std::max(scene.min_corner[i], static_cast<int>(std::floor(lo)) - 1);
    last[i] = std::min(scene.min_corner[i] + lattice.cells_per_axis() - 1, static_cast<int>(std::ceil(hi)));
    if (first[i] > last[i]) return {};
  }
  std::vector<std::size_t> hits;
  Eigen::VectorXi c = first;
  const bool closed = contact == Contact::Closed;
  const double threshold = closed ? tube.radius + 1e-9 : tube.radius - 1e-9;
  for (;;) {
    const Vec lo = c.cast<double>();
    const Vec hi = lo.array() + 1.0;
    const double dist = segment_box_distance(a, b, lo, hi);
    if (closed ? dist <= threshold : dist < threshold) hits.push_back(lattice.index(c));
    int i = 0;
    while (i < n && c[i] == last[i]) {
      c[i] = first[i];
      ++i;
    }
    if (i == n) break;
    ++c[i];
  }
  std::sort(hits.begin(), hits.end());
  return hits;
}

namespace {

double abs_det(const std::vector<const Vec*>& cols) {
  const std::size_t n = cols.size();
  if (n == 1) return std::abs((*cols[0])[0]);
  if (n == 2) return std::abs((*cols[0])[0] * (*cols[1])[1] - (*cols[0])[1] * (*cols[1])[0]);
  if (n == 3) {
    const auto& u = *cols[0];
    const auto& v = *cols[1];
    const auto& w = *cols[2];
    return std::abs(u[0] * (v[1] * w[2] - v[2] * w[1]) - u[1] * (v[0] * w[2] - v[2] * w[0]) +
                    u[2] * (v[0] * w[1] - v[1] * w[0]));
  }
  Mat m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) m.col(static_cast<Eigen::Index>(j)) = *cols[j];
  return std::abs(m.partialPivLu().determinant());
}

}  // namespace

DeterminantBound min_determinant(const std::vector<std::vector<Vec>>& families, std::uint64_t seed) {
  const std::size_t n = families.size();
  if (n == 0) throw Error(ErrorKind::ValidationError, "no direction families");
  double total = 1.0;
  for (const auto& f : families) {
    if (f.empty()) throw Error(ErrorKind::EmptyFamily, "a direction family is empty");
    for (const auto& v : f)
      if (static_cast<std::size_t>(v.size()) != n)
        throw Error(ErrorKind::ValidationError, "family count must equal the dimension");
    total *= static_cast<double>(f.size());
  }
  constexpr std::size_t kCap = 1000000;
  DeterminantBound out;
  out.theta = kUnbounded;
  std::vector<const Vec*> cols(n);
  if (total <= static_cast<double>(kCap)) {
    std::vector<std::size_t> idx(n, 0);
    for (;;) {
      for (std::size_t j = 0; j < n; ++j) cols[j] = &families[j][idx[j]];
      out.theta = std::min(out.theta, abs_det(cols));
      ++out.tuples;
      std::size_t j = 0;
      while (j < n && ++idx[j] == families[j].size()) idx[j++] = 0;
      if (j == n) break;
    }
    out.exhaustive = true;
    return out;
  }
  out.exhaustive = false;
  Engine eng = make_engine(seed, stream::kDeterminant);
  for (std::size_t s = 0; s < kCap; ++s) {
    for (std::size_t j = 0; j < n; ++j)
      cols[j] = &families[j][static_cast<std::size_t>(uniform01(eng) * static_cast<double>(families[j].size()))];
    out.theta = std::min(out.theta, abs_det(cols));
    ++out.tuples;
  }
  return out;
}

double ConvexBodySample::volume() const {
  const int n = dim();
  return unit_ball_volume(n) * radial.array().pow(static_cast<double>(n)).mean();
}

double ConvexBodySample::support(const Vec& w) const {
  return ((w.transpose() * directions).array().abs() * radial.transpose().array()).maxCoeff();
}

double ConvexBodySample::radial_at(const Vec& u) const {
  const Eigen::Index k = directions.cols();
  if (dim() == 2) {
    // Boundary polygon through the samples, ordered by angle.
    const double phi = std::atan2(u[1], u[0]);
    Eigen::Index below = -1, above = -1;
    double gap_below = kUnbounded, gap_above = kUnbounded;
    for (Eigen::Index i = 0; i < k; ++i) {
      double delta = std::atan2(directions(1, i), directions(0, i)) - phi;
      delta = std::remainder(delta, 2.0 * std::numbers::pi);
      if (delta <= 0.0 && -delta < gap_below) {
        gap_below = -delta;
        below = i;
      }
      if (delta >= 0.0 && delta < gap_above) {
        gap_above = delta;
        above = i;
      }
    }
    if (below < 0) return radial[above];
    if (above < 0 || above == below) return radial[below];
    const Vec p = radial[below] * directions.col(below);
    const Vec q = radial[above] * directions.col(above);
    // ray t u meets segment p + s (q - p): solve t u - s (q - p) = p
    Mat m(2, 2);
    m.col(0) = u;
    m.col(1) = p - q;
    const double det = m.determinant();
    if (std::abs(det) < 1e-300) return std::min(radial[below], radial[above]);
    const Vec ts = m.partialPivLu().solve(p);
    return ts[0];
  }
  Eigen::Index best = 0;
  (u.transpose() * directions).maxCoeff(&best);
  return radial[best];
}

bool ConvexBodySample::contains(const Vec& x, double slack) const {
  const double r = x.norm();
  if (r == 0.0) return true;
  return r <= radial_at(x / r) * (1.0 + slack);
}

Mat sphere_directions(int n, std::size_t k, std::uint64_t seed) {
  if (n < 1 || k < 2 || k % 2 != 0) throw Error(ErrorKind::ValidationError, "direction count must be even and positive");
  const Eigen::Index half = static_cast<Eigen::Index>(k / 2);
  Mat out(n, static_cast<Eigen::Index>(k));
  if (n == 2) {
    for (Eigen::Index i = 0; i < half; ++i) {
      const double phi = std::numbers::pi * (static_cast<double>(i) + 0.5) / static_cast<double>(half);
      out(0, i) = std::cos(phi);
      out(1, i) = std::sin(phi);
    }
  } else {
    Engine eng = make_engine(seed, stream::kDirections);
    for (Eigen::Index i = 0; i < half; ++i) out.col(i) = random_unit_vector(n, eng);
  }
  out.rightCols(half) = -out.leftCols(half);
  return out;
}

std::size_t default_direction_count(int n) { return n <= 3 ? 512 : 4096; }

JohnResult john_inner_ellipsoid(const ConvexBodySample& body, double tol) {
  const int n = body.dim();
  const Eigen::Index k = body.directions.cols();
  if (k < 2 * n) throw Error(ErrorKind::DegenerateBody, "too few body samples");
  if (!(body.radial.array() > 0.0).all() || !body.radial.allFinite())
    throw Error(ErrorKind::DegenerateBody, "body radial function must be positive and finite");

  // Support of the symmetric hull at each sample direction; the polar body is
  // the symmetric hull of a_j = u_j / h(u_j).
  const Mat pts = body.directions * body.radial.asDiagonal();
  const Vec h = (body.directions.transpose() * pts).cwiseAbs().rowwise().maxCoeff();
  if (h.minCoeff() <= 1e-12 * h.maxCoeff()) throw Error(ErrorKind::DegenerateBody, "body is flat");
  const Mat a = body.directions * h.cwiseInverse().asDiagonal();

  // Khachiyan iterations for the minimum-volume centred ellipsoid enclosing
  // the points +-a_j.
  Vec w = Vec::Constant(k, 1.0 / static_cast<double>(k));
  JohnResult out;
  Mat X(n, n);
  for (out.iterations = 0; out.iterations < 200000; ++out.iterations) {
    X = a * w.asDiagonal() * a.transpose();
    Eigen::LLT<Mat> llt(X);
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::DegenerateBody, "polar body is degenerate");
    const Mat L = llt.matrixL().solve(a);
    const Vec M = L.colwise().squaredNorm().transpose();
    Eigen::Index j = 0;
    const double mj = M.maxCoeff(&j);
    if (mj <= n * (1.0 + tol)) break;
    const double beta = (mj - n) / (n * (mj - 1.0));
    w *= (1.0 - beta);
    w[j] += beta;
  }
  X = a * w.asDiagonal() * a.transpose();
  // Enclosing ellipsoid of the polar: y^T X^-1 y <= n (1 + tol) covers every
  // a_j, so its polar, with form n (1 + tol) X, sits inside the hull.
  Mat q = static_cast<double>(n) * (1.0 + tol) * X;
  q = 0.5 * (q + q.transpose());
  out.ellipsoid = Ellipsoid(q);
  Eigen::SelfAdjointEigenSolver<Mat> es(q, Eigen::EigenvaluesOnly);
  out.degenerate = es.eigenvalues().maxCoeff() > 1e12 * es.eigenvalues().minCoeff();
  return out;
}

}  // namespace pk
