#include "pk/measure.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <sstream>

namespace pk {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_tube_region(const Tube& t) {
  if (!t.bounded()) throw Error(ErrorKind::ValidationError, "tube regions must be bounded");
}

using Interval = std::optional<std::pair<double, double>>;

Interval clip_box(const Vec& lo, const Vec& hi, const Vec& p, const Vec& u) {
  double t0 = -kUnbounded, t1 = kUnbounded;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (u[i] == 0.0) {
      if (p[i] < lo[i] || p[i] > hi[i]) return std::nullopt;
      continue;
    }
    double a = (lo[i] - p[i]) / u[i];
    double b = (hi[i] - p[i]) / u[i];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
  }
  if (t0 > t1) return std::nullopt;
  return std::make_pair(t0, t1);
}

Interval clip_ball(const Vec& c, double r, const Vec& p, const Vec& u) {
  const Vec w = p - c;
  const double a = u.squaredNorm();
  const double b = w.dot(u);
  const double disc = b * b - a * (w.squaredNorm() - r * r);
  if (disc < 0.0) return std::nullopt;
  const double s = std::sqrt(disc);
  return std::make_pair((-b - s) / a, (-b + s) / a);
}

Interval clip_capsule(const Tube& t, const Vec& p, const Vec& u) {
  // Union of the finite cylinder and the two end balls; the capsule is convex
  // so the union of the pieces is one interval.
  Interval out;
  auto merge = [&](const Interval& piece) {
    if (!piece) return;
    if (!out) out = piece;
    else out = std::make_pair(std::min(out->first, piece->first), std::max(out->second, piece->second));
  };
  merge(clip_ball(t.start(), t.radius, p, u));
  merge(clip_ball(t.end(), t.radius, p, u));
  // cylinder: |perp(p - c + s u)| <= r and |axial| <= L/2
  const Vec w = p - t.core_point;
  const Vec wp = w - w.dot(t.direction) * t.direction;
  const Vec up = u - u.dot(t.direction) * t.direction;
  const double a = up.squaredNorm();
  double s0, s1;
  if (a < 1e-300) {
    if (wp.squaredNorm() > t.radius * t.radius) return out;
    s0 = -kUnbounded;
    s1 = kUnbounded;
  } else {
    const double b = wp.dot(up);
    const double disc = b * b - a * (wp.squaredNorm() - t.radius * t.radius);
    if (disc < 0.0) return out;
    const double sq = std::sqrt(disc);
    s0 = (-b - sq) / a;
    s1 = (-b + sq) / a;
  }
  const double ax = w.dot(t.direction);
  const double au = u.dot(t.direction);
  if (std::abs(au) < 1e-300) {
    if (std::abs(ax) > 0.5 * t.length) return out;
  } else {
    double l0 = (-0.5 * t.length - ax) / au;
    double l1 = (0.5 * t.length - ax) / au;
    if (l0 > l1) std::swap(l0, l1);
    s0 = std::max(s0, l0);
    s1 = std::min(s1, l1);
  }
  if (s0 <= s1) merge(std::make_pair(s0, s1));
  return out;
}

}  // namespace

int region_dim(const Region& r) {
  return std::visit(overloaded{[](const Box& b) { return static_cast<int>(b.lo.size()); },
                               [](const Ball& b) { return static_cast<int>(b.center.size()); },
                               [](const Tube& t) { return t.dim(); }},
                    r);
}

bool region_contains(const Region& r, const Vec& x) {
  return std::visit(overloaded{[&](const Box& b) { return (x.array() >= b.lo.array()).all() && (x.array() <= b.hi.array()).all(); },
                               [&](const Ball& b) { return (x - b.center).squaredNorm() <= b.radius * b.radius; },
                               [&](const Tube& t) { return t.contains(x); }},
                    r);
}

Box bounding_box(const Region& r) {
  return std::visit(overloaded{[](const Box& b) { return b; },
                               [](const Ball& b) {
                                 return Box{b.center.array() - b.radius, b.center.array() + b.radius};
                               },
                               [](const Tube& t) {
                                 check_tube_region(t);
                                 const Vec a = t.start(), e = t.end();
                                 return Box{a.cwiseMin(e).array() - t.radius, a.cwiseMax(e).array() + t.radius};
                               }},
                    r);
}

double region_volume(const Region& r) {
  return std::visit(overloaded{[](const Box& b) { return (b.hi - b.lo).prod(); },
                               [](const Ball& b) {
                                 const int n = static_cast<int>(b.center.size());
                                 return unit_ball_volume(n) * std::pow(b.radius, n);
                               },
                               [](const Tube& t) {
                                 check_tube_region(t);
                                 const int n = t.dim();
                                 return unit_ball_volume(n - 1) * std::pow(t.radius, n - 1) * t.length +
                                        unit_ball_volume(n) * std::pow(t.radius, n);
                               }},
                    r);
}

std::string describe(const Region& r) {
  std::ostringstream os;
  os.precision(17);
  auto list = [&](const Vec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  };
  std::visit(overloaded{[&](const Box& b) {
                          os << "box:";
                          list(b.lo);
                          os << ":";
                          list(b.hi);
                        },
                        [&](const Ball& b) {
                          os << "ball:";
                          list(b.center);
                          os << ":" << b.radius;
                        },
                        [&](const Tube& t) {
                          os << "tube:";
                          list(t.core_point);
                          os << ":";
                          list(t.direction);
                          os << ":" << t.radius << ":" << t.length;
                        }},
             r);
  return os.str();
}

std::optional<std::pair<double, double>> clip_line(const Region& r, const Vec& p, const Vec& u) {
  return std::visit(overloaded{[&](const Box& b) { return clip_box(b.lo, b.hi, p, u); },
                               [&](const Ball& b) { return clip_ball(b.center, b.radius, p, u); },
                               [&](const Tube& t) {
                                 check_tube_region(t);
                                 return clip_capsule(t, p, u);
                               }},
                    r);
}

std::pair<Vec, Vec> projected_extent(const Region& r, const Mat& basis) {
  return std::visit(
      overloaded{[&](const Box& b) {
                   // Linear functional over a box: per-coordinate extreme.
                   const Vec mid = 0.5 * (b.lo + b.hi);
                   const Vec half = 0.5 * (b.hi - b.lo);
                   const Vec c = basis.transpose() * mid;
                   const Vec w = basis.cwiseAbs().transpose() * half;
                   return std::make_pair(Vec(c - w), Vec(c + w));
                 },
                 [&](const Ball& b) {
                   const Vec c = basis.transpose() * b.center;
                   return std::make_pair(Vec(c.array() - b.radius), Vec(c.array() + b.radius));
                 },
                 [&](const Tube& t) {
                   check_tube_region(t);
                   const Vec a = basis.transpose() * t.start();
                   const Vec e = basis.transpose() * t.end();
                   return std::make_pair(Vec(a.cwiseMin(e).array() - t.radius), Vec(a.cwiseMax(e).array() + t.radius));
                 }},
      r);
}

Mat orthogonal_complement(const Vec& u) {
  const Eigen::Index n = u.size();
  Eigen::HouseholderQR<Mat> qr(Mat(u.reshaped(n, 1)));
  const Mat q = qr.householderQ();
  return q.rightCols(n - 1);
}

BoxSampler::BoxSampler(Vec lo, Vec hi, std::size_t count, bool stratified)
    : lo_(std::move(lo)), hi_(std::move(hi)), count_(count), stratified_(stratified) {
  if (count_ < 1) throw Error(ErrorKind::ValidationError, "sample count must be positive");
  if (lo_.size() != hi_.size()) throw Error(ErrorKind::ValidationError, "box corner dimensions differ");
  if (stratified_ && lo_.size() > 0) {
    const auto n = static_cast<double>(lo_.size());
    grid_ = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(count_), 1.0 / n) + 1e-9));
    while (std::pow(static_cast<double>(grid_ + 1), n) <= static_cast<double>(count_)) ++grid_;
    while (grid_ > 1 && std::pow(static_cast<double>(grid_), n) > static_cast<double>(count_)) --grid_;
    cells_ = 1;
    for (Eigen::Index i = 0; i < lo_.size(); ++i) cells_ *= grid_;
  }
}

void BoxSampler::block(std::size_t b, std::uint64_t seed, std::uint64_t stream, Mat& pts) const {
  const Eigen::Index n = lo_.size();
  const std::size_t first = b * kBlockSize;
  const std::size_t m = block_size(b);
  pts.resize(n, static_cast<Eigen::Index>(m));
  Engine eng = make_engine(seed, stream, b);
  const Vec span = hi_ - lo_;
  for (std::size_t s = 0; s < m; ++s) {
    const std::size_t idx = first + s;
    auto col = pts.col(static_cast<Eigen::Index>(s));
    if (idx < cells_) {
      std::size_t rest = idx;
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto cell = static_cast<double>(rest % grid_);
        rest /= grid_;
        col[i] = lo_[i] + span[i] * (cell + uniform01(eng)) / static_cast<double>(grid_);
      }
    } else {
      for (Eigen::Index i = 0; i < n; ++i) col[i] = lo_[i] + span[i] * uniform01(eng);
    }
  }
}

VolumeEstimate estimate_volume(const std::function<bool(const Vec&)>& inside, const Vec& lo, const Vec& hi,
                               const SampleBudget& budget, std::uint64_t stream_tag) {
  const BoxSampler sampler(lo, hi, budget.count, budget.stratified);
  std::vector<std::size_t> hits(sampler.blocks(), 0);
  parallel_for(sampler.blocks(), [&](std::size_t b) {
    Mat pts;
    sampler.block(b, budget.seed, stream_tag, pts);
    std::size_t h = 0;
    for (Eigen::Index s = 0; s < pts.cols(); ++s)
      if (inside(pts.col(s))) ++h;
    hits[b] = h;
  });
  std::size_t total = 0;
  for (auto h : hits) total += h;
  const double p = static_cast<double>(total) / static_cast<double>(budget.count);
  const double vol = sampler.box_volume();
  return {vol * p, vol * std::sqrt(p * (1.0 - p) / static_cast<double>(budget.count)), budget.count};
}

VolumeEstimate estimate_volume(const Region& region, const SampleBudget& budget) {
  const Box bb = bounding_box(region);
  return estimate_volume([&](const Vec& x) { return region_contains(region, x); }, bb.lo, bb.hi, budget);
}

VolumeEstimate signed_measure_split(const Surface& P, const Region& U, const SampleBudget& budget) {
  const Box bb = bounding_box(U);
  const BoxSampler sampler(bb.lo, bb.hi, budget.count, budget.stratified);
  std::vector<long long> net(sampler.blocks(), 0), nonzero(sampler.blocks(), 0);
  parallel_for(sampler.blocks(), [&](std::size_t b) {
    Mat pts;
    sampler.block(b, budget.seed, stream::kVolume, pts);
    long long s = 0, nz = 0;
    for (Eigen::Index i = 0; i < pts.cols(); ++i) {
      const Vec x = pts.col(i);
      if (!region_contains(U, x)) continue;
      const double v = P(x);
      if (v > 0.0) ++s, ++nz;
      else if (v < 0.0) --s, ++nz;
    }
    net[b] = s;
    nonzero[b] = nz;
  });
  long long s = 0, nz = 0;
  for (std::size_t b = 0; b < net.size(); ++b) s += net[b], nz += nonzero[b];
  const double m = static_cast<double>(budget.count);
  const double vol = sampler.box_volume();
  const double mean = static_cast<double>(s) / m;
  const double second = static_cast<double>(nz) / m;
  return {vol * mean, vol * std::sqrt(std::max(0.0, second - mean * mean) / m), budget.count};
}

double mean_abs_projection(int n) {
  return std::tgamma(0.5 * n) / (std::sqrt(std::numbers::pi) * std::tgamma(0.5 * (n + 1)));
}

namespace {

struct Accumulator {
  double sum = 0.0;
  double sumsq = 0.0;
  std::size_t hits = 0;
};

SurfaceEstimate finish(const std::vector<Accumulator>& parts, std::size_t count) {
  Accumulator acc;
  for (const auto& p : parts) {
    acc.sum += p.sum;
    acc.sumsq += p.sumsq;
    acc.hits += p.hits;
  }
  const double m = static_cast<double>(count);
  const double mean = acc.sum / m;
  const double var = std::max(0.0, acc.sumsq / m - mean * mean);
  return {mean, std::sqrt(var / m), count, acc.hits};
}

SurfaceEstimate slab_integral(const Surface& Z, const Region& U, const SurfaceFunction& f, const SampleBudget& budget) {
  const Box bb = bounding_box(U);
  const double delta = 1e-3 * (bb.hi - bb.lo).norm();
  const BoxSampler sampler(bb.lo.array() - delta, bb.hi.array() + delta, budget.count, budget.stratified);
  const double weight = sampler.box_volume() / (2.0 * delta);
  std::vector<Accumulator> parts(sampler.blocks());
  parallel_for(sampler.blocks(), [&](std::size_t b) {
    Mat pts;
    sampler.block(b, budget.seed, stream::kSurfaceSlab, pts);
    Accumulator acc;
    for (Eigen::Index s = 0; s < pts.cols(); ++s) {
      const Vec x = pts.col(s);
      double contrib = 0.0;
      for (const auto& F : Z.factors()) {
        double val = F(x);
        Vec g = F.gradient(x);
        double gn = g.norm();
        if (gn < 1e-10) {
          if (std::abs(val) < 1e-10) throw Error(ErrorKind::SingularSurface, "vanishing gradient on the surface");
          continue;
        }
        if (std::abs(val) >= 2.0 * delta * gn) continue;
        Vec y = x;
        // Newton projection; on a singular sheet the gradient collapses and we stop.
        for (int it = 0; it < 60; ++it) {
          y -= (val / (gn * gn)) * g;
          val = F(y);
          g = F.gradient(y);
          gn = g.norm();
          if (gn < 1e-10) throw Error(ErrorKind::SingularSurface, "vanishing gradient on the surface");
          if (std::abs(val) < 1e-14 * gn) break;
        }
        if ((y - x).norm() >= delta || !region_contains(U, y)) continue;
        contrib += f(y, g / gn);
        ++acc.hits;
      }
      const double v = weight * contrib;
      acc.sum += v;
      acc.sumsq += v * v;
    }
    parts[b] = acc;
  });
  return finish(parts, budget.count);
}

SurfaceEstimate lines_integral(const Surface& Z, const Region& U, const SurfaceFunction& f, const SampleBudget& budget) {
  const int n = region_dim(U);
  if (n < 2) throw Error(ErrorKind::ValidationError, "line sampling needs n >= 2");
  const double cn = mean_abs_projection(n);
  const std::size_t blocks = (budget.count + kBlockSize - 1) / kBlockSize;
  std::vector<Accumulator> parts(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    Engine eng = make_engine(budget.seed, stream::kSurfaceLines, b);
    const std::size_t m = std::min(kBlockSize, budget.count - b * kBlockSize);
    Accumulator acc;
    for (std::size_t s = 0; s < m; ++s) {
      const Vec u = random_unit_vector(n, eng);
      const Mat basis = orthogonal_complement(u);
      const auto [plo, phi] = projected_extent(U, basis);
      Vec y(n - 1);
      for (int i = 0; i < n - 1; ++i) y[i] = plo[i] + (phi[i] - plo[i]) * uniform01(eng);
      const double area = (phi - plo).prod();
      const Vec p = basis * y;
      double sum = 0.0;
      if (auto seg = clip_line(U, p, u); seg && seg->second > seg->first) {
        const double pad = 1e-12 * (seg->second - seg->first);
        for (const auto& F : Z.factors()) {
          const auto q = restrict_to_line(F, p, u);
          const auto roots = real_roots(q, seg->first - pad, seg->second, F.max_abs_coeff());
          if (!roots) continue;  // line inside Z: measure zero
          for (double t : *roots) {
            const Vec x = p + t * u;
            const Vec g = F.gradient(x);
            const double gn = g.norm();
            if (gn < 1e-10) throw Error(ErrorKind::SingularSurface, "vanishing gradient on the surface");
            sum += f(x, g / gn);
            ++acc.hits;
          }
        }
      }
      const double v = area * sum / cn;
      acc.sum += v;
      acc.sumsq += v * v;
    }
    parts[b] = acc;
  });
  return finish(parts, budget.count);
}

}  // namespace

SurfaceEstimate surface_integral(const Surface& Z, const Region& U, const SurfaceFunction& f, const SampleBudget& budget,
                                 SurfaceScheme scheme) {
  if (Z.dim() != region_dim(U)) throw Error(ErrorKind::ValidationError, "surface and region dimensions differ");
  return scheme == SurfaceScheme::Slab ? slab_integral(Z, U, f, budget) : lines_integral(Z, U, f, budget);
}

}  // namespace pk
