#include "pk/planiness.hpp"

#include <algorithm>
#include <map>

namespace pk {

namespace {

void validate_union(const TubeUnion& X) {
  for (const auto& t : X) {
    if (!t.bounded()) throw Error(ErrorKind::ValidationError, "tube unions must consist of bounded tubes");
    if (t.dim() != X.front().dim()) throw Error(ErrorKind::ValidationError, "tubes of mixed dimension");
  }
}

std::vector<int> cell_of(const Vec& x, double size) {
  std::vector<int> c(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) c[static_cast<std::size_t>(i)] = static_cast<int>(std::floor(x[i] / size));
  return c;
}

// Neighbouring cells of c, including c, in odometer order.
template <class F>
void for_each_neighbour(const std::vector<int>& c, F&& f) {
  const std::size_t n = c.size();
  std::vector<int> offset(n, -1);
  for (;;) {
    std::vector<int> cell = c;
    for (std::size_t i = 0; i < n; ++i) cell[i] += offset[i];
    f(cell);
    std::size_t i = 0;
    while (i < n && offset[i] == 1) offset[i++] = -1;
    if (i == n) return;
    ++offset[i];
  }
}

}  // namespace

bool union_contains(const TubeUnion& X, const Vec& x) {
  return std::any_of(X.begin(), X.end(), [&](const Tube& t) { return t.contains(x); });
}

Box union_bounding_box(const TubeUnion& X) {
  if (X.empty()) throw Error(ErrorKind::ValidationError, "empty tube union has no bounding box");
  Box all = bounding_box(Region(X.front()));
  for (const auto& t : X) {
    const Box b = bounding_box(Region(t));
    all.lo = all.lo.cwiseMin(b.lo);
    all.hi = all.hi.cwiseMax(b.hi);
  }
  return all;
}

VolumeEstimate union_volume(const TubeUnion& X, const SampleBudget& budget) {
  if (X.empty()) return {};
  validate_union(X);
  const Box bb = union_bounding_box(X);
  return estimate_volume([&](const Vec& x) { return union_contains(X, x); }, bb.lo, bb.hi, budget);
}

double tube_volume(const Tube& T) {
  const int n = T.dim();
  return unit_ball_volume(n - 1) * std::pow(T.radius, n - 1) * T.length + unit_ball_volume(n) * std::pow(T.radius, n);
}

Vec sample_in_tube(const Tube& T, Engine& eng) {
  const Box bb = bounding_box(Region(T));
  Vec x(T.dim());
  for (;;) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = bb.lo[i] + (bb.hi[i] - bb.lo[i]) * uniform01(eng);
    if (T.contains(x)) return x;
  }
}

std::vector<Ball> ball_cover(const TubeUnion& X, double radius, double spacing) {
  if (!(radius > 0.0) || !(spacing > 0.0)) throw Error(ErrorKind::ValidationError, "cover radius and spacing must be positive");
  std::vector<Ball> cover;
  if (X.empty()) return cover;
  validate_union(X);
  const Box bb = union_bounding_box(X);
  const int n = X.front().dim();
  Eigen::VectorXi steps(n);
  for (int i = 0; i < n; ++i) steps[i] = std::max(1, static_cast<int>(std::ceil((bb.hi[i] - bb.lo[i]) / spacing)));

  const double gap = 2.0 * radius;
  std::map<std::vector<int>, std::vector<std::size_t>> grid;
  Eigen::VectorXi idx = Eigen::VectorXi::Zero(n);
  for (;;) {
    const Vec x = bb.lo + spacing * (idx.cast<double>().array() + 0.5).matrix();
    if (union_contains(X, x)) {
      bool free = true;
      const auto cell = cell_of(x, gap);
      for_each_neighbour(cell, [&](const std::vector<int>& c) {
        if (!free) return;
        const auto it = grid.find(c);
        if (it == grid.end()) return;
        for (std::size_t k : it->second)
          if ((cover[k].center - x).norm() < gap - 1e-12) free = false;
      });
      if (free) {
        grid[cell].push_back(cover.size());
        cover.push_back(Ball{x, radius});
      }
    }
    int i = 0;
    while (i < n && idx[i] == steps[i] - 1) idx[i++] = 0;
    if (i == n) break;
    ++idx[i];
  }
  return cover;
}

double cover_fraction(const TubeUnion& X, const std::vector<Ball>& cover, const SampleBudget& budget, double factor) {
  if (X.empty()) return 1.0;
  validate_union(X);
  const Box bb = union_bounding_box(X);
  double reach = 0.0;
  for (const auto& b : cover) reach = std::max(reach, factor * b.radius);
  std::map<std::vector<int>, std::vector<std::size_t>> grid;
  const double size = std::max(reach, 1e-9);
  for (std::size_t k = 0; k < cover.size(); ++k) grid[cell_of(cover[k].center, size)].push_back(k);

  const BoxSampler sampler(bb.lo, bb.hi, budget.count, budget.stratified);
  std::vector<std::size_t> in(sampler.blocks(), 0), covered(sampler.blocks(), 0);
  parallel_for(sampler.blocks(), [&](std::size_t b) {
    Mat pts;
    sampler.block(b, budget.seed, stream::kCover, pts);
    for (Eigen::Index i = 0; i < pts.cols(); ++i) {
      const Vec x = pts.col(i);
      if (!union_contains(X, x)) continue;
      ++in[b];
      bool hit = false;
      for_each_neighbour(cell_of(x, size), [&](const std::vector<int>& c) {
        if (hit) return;
        const auto it = grid.find(c);
        if (it == grid.end()) return;
        for (std::size_t k : it->second)
          if ((cover[k].center - x).norm() <= factor * cover[k].radius) hit = true;
      });
      covered[b] += hit;
    }
  });
  std::size_t total = 0, good = 0;
  for (std::size_t b = 0; b < in.size(); ++b) total += in[b], good += covered[b];
  return total ? static_cast<double>(good) / static_cast<double>(total) : 1.0;
}

ConvexBodySample BoxField::body(const Vec& x) const {
  ConvexBodySample b;
  b.directions = directions;
  b.radial.resize(directions.cols());
  if (trivial) {
    for (Eigen::Index i = 0; i < directions.cols(); ++i) b.radial[i] = 0.5 * L / directions.col(i).cwiseAbs().maxCoeff();
    return b;
  }
  const Ball ball{x, 1.0};
  Vec V = Vec::Zero(directions.cols());
  for (const auto& h : arrangement) {
    const double area = section_volume(h, Region(ball), SampleBudget{});
    if (area > 0.0) V += area * (directions.transpose() * h.normal).cwiseAbs();
  }
  for (Eigen::Index i = 0; i < V.size(); ++i) b.radial[i] = L * std::min(1.0, 1.0 / V[i]);
  return b;
}

double BoxField::required_sigma(const Tube& T, const Vec& x) const {
  const ConvexBodySample b = body(x);
  const Vec ep = (T.end() - x).transpose() * directions;
  const Vec em = (T.start() - x).transpose() * directions;
  // support of the symmetric hull of the boundary samples at every direction
  const Mat G = directions.transpose() * directions;
  const Vec h = (G.array().colwise() * b.radial.array()).abs().colwise().maxCoeff().transpose();
  double sigma = 0.0;
  for (Eigen::Index i = 0; i < directions.cols(); ++i)
    sigma = std::max(sigma, (std::max(ep[i], em[i]) + T.radius) / (h[i] * (1.0 + slack)));
  return sigma;
}

BoxField build_box_field(const TubeUnion& X, double L, const SampleBudget& budget, const BoxFieldOptions& options) {
  if (!(L > 1.0)) throw Error(ErrorKind::ValidationError, "tube length L must exceed 1");
  if (X.empty()) throw Error(ErrorKind::ValidationError, "box field of an empty tube union");
  validate_union(X);
  BoxField field;
  field.n = X.front().dim();
  field.L = L;
  field.slack = options.slack;
  field.directions = sphere_directions(field.n, options.directions, budget.seed);
  field.volume_X = union_volume(X, budget).value;
  if (field.volume_X > 0.5 * std::pow(L, field.n)) {
    field.trivial = true;
    return field;
  }

  const double M = std::pow(L, field.n) / field.volume_X;
  std::vector<VisibilityTarget> targets;
  for (const auto& b : ball_cover(X)) targets.push_back({Ball{b.center, options.target_radius}, M});
  SearchOptions so = options.search;
  so.sweep = false;
  so.d_cap = static_cast<int>(std::ceil(options.degree_factor * L));
  so.shrink = options.shrink;
  so.validate = false;
  field.search = find_high_visibility_surface(targets, so, budget);
  if (!field.search.success)
    throw Error(ErrorKind::Stalled, "no degree-" + std::to_string(so.d_cap) + " arrangement reached visibility " +
                                        std::to_string(M) + " on every cover ball (min ratio " +
                                        std::to_string(field.search.min_ratio) + ")");
  field.arrangement = field.search.arrangement;
  return field;
}

std::vector<double> required_sigmas(const Tube& T, const BoxField& field, const SampleBudget& budget) {
  Engine eng = make_engine(budget.seed, stream::kTubePoints);
  std::vector<Vec> pts;
  for (std::size_t i = 0; i < budget.count; ++i) pts.push_back(sample_in_tube(T, eng));
  std::vector<double> out(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) { out[i] = field.required_sigma(T, pts[i]); });
  return out;
}

double containment_probability(const Tube& T, const BoxField& field, double sigma, const SampleBudget& budget) {
  if (!(sigma > 1.0)) throw Error(ErrorKind::ValidationError, "dilation sigma must exceed 1");
  const auto s = required_sigmas(T, field, budget);
  if (s.empty()) return 1.0;
  const auto ok = std::count_if(s.begin(), s.end(), [&](double v) { return v <= sigma; });
  return static_cast<double>(ok) / static_cast<double>(s.size());
}

SigmaLaw sigma_law(const TubeUnion& tubes, const BoxField& field, const std::vector<double>& sigmas,
                   const SampleBudget& budget) {
  std::vector<double> pooled;
  for (const auto& T : tubes) {
    const auto s = required_sigmas(T, field, budget);
    pooled.insert(pooled.end(), s.begin(), s.end());
  }
  std::sort(pooled.begin(), pooled.end());
  SigmaLaw law;
  if (pooled.empty()) return law;
  const auto N = static_cast<double>(pooled.size());
  law.sigma_nine_tenths = pooled[static_cast<std::size_t>(std::ceil(0.9 * N)) - 1];
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (double sigma : sigmas) {
    const auto above = pooled.end() - std::upper_bound(pooled.begin(), pooled.end(), sigma);
    const double f = static_cast<double>(above) / N;
    law.sigma.push_back(sigma);
    law.failure.push_back(f);
    if (f <= 0.0) continue;
    const double x = std::log(sigma), y = std::log(f);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
    ++law.fitted;
  }
  const auto m = static_cast<double>(law.fitted);
  law.exponent = law.fitted >= 2 ? (m * sxy - sx * sy) / (m * sxx - sx * sx) : std::numeric_limits<double>::quiet_NaN();
  return law;
}

Lemma71Average lemma71_average(const Tube& T, const Surface& Z, const SampleBudget& budget, std::size_t points) {
  if (!T.bounded()) throw Error(ErrorKind::ValidationError, "tube averages need a bounded tube");
  Lemma71Average out;
  if (Z.empty() || points == 0) return out;
  const int n = T.dim();
  out.comparison = unit_ball_volume(n) * cylinder_bound(n, 3.0 * T.radius, Z.degree()) / tube_volume(T);
  Engine eng = make_engine(budget.seed, stream::kTubePoints, 1);
  std::vector<Vec> pts;
  for (std::size_t i = 0; i < points; ++i) pts.push_back(sample_in_tube(T, eng));
  std::vector<double> v(points);
  parallel_for(points, [&](std::size_t i) {
    v[i] = directed_volume_fiber(Z, Region(Ball{pts[i], 1.0}), T.direction, budget).value;
  });
  double sum = 0.0, sq = 0.0;
  for (double x : v) sum += x, sq += x * x;
  const auto m = static_cast<double>(points);
  out.average = sum / m;
  out.std_error = points > 1 ? std::sqrt(std::max(0.0, sq / m - out.average * out.average) / (m - 1)) : 0.0;
  return out;
}

}  // namespace pk
