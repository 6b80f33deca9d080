#include "pk/visibility.hpp"

#include <algorithm>

namespace pk {

VisibilityReport visibility_from_directed(const Mat& directions, const Vec& directed, bool john) {
  VisibilityReport out;
  out.directed = directed;
  out.body.directions = directions;
  out.body.radial = directed.unaryExpr([](double v) { return v > 1.0 ? 1.0 / v : 1.0; });
  out.volume = out.body.volume();
  out.vis = 1.0 / out.volume;
  const int n = static_cast<int>(directions.rows());
  out.john = Ellipsoid::ball(n);
  if (john) {
    try {
      out.john = john_inner_ellipsoid(out.body).ellipsoid;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateBody) throw;
      out.john_degenerate = true;
    }
  }
  return out;
}

std::vector<Surface> mollified_ensemble(const Surface& Z, const MollifiedQuery& m, std::uint64_t seed) {
  if (!(m.epsilon > 0.0) || m.k < 8) throw Error(ErrorKind::ValidationError, "mollification needs epsilon > 0 and k >= 8");
  std::vector<Surface> out;
  out.reserve(static_cast<std::size_t>(m.k));
  for (int i = 0; i < m.k; ++i) {
    Engine eng = make_engine(seed, stream::kMollify, static_cast<std::uint64_t>(i));
    std::vector<Poly> factors;
    for (const auto& F : Z.factors()) {
      const Vec c = F.coeffs().normalized();
      Vec xi(c.size());
      for (auto& x : xi) x = normal01(eng);
      xi -= xi.dot(c) * c;
      if (xi.norm() > 0.0) xi.normalize();
      factors.emplace_back(F.dim(), F.degree(), (c + m.epsilon * xi).normalized(), F.chart());
    }
    out.emplace_back(std::move(factors));
  }
  return out;
}

DirectedVolume mollified_directed_volume(const Surface& Z, const Region& U, const Vec& v, const MollifiedQuery& m,
                                         const SampleBudget& budget) {
  const auto ensemble = mollified_ensemble(Z, m, budget.seed);
  DirectedVolume out;
  double sum = 0.0, sumsq = 0.0, var = 0.0;
  for (const auto& Zp : ensemble) {
    const auto dv = directed_volume_fiber(Zp, U, v, budget);
    sum += dv.value;
    sumsq += dv.value * dv.value;
    var += dv.std_error * dv.std_error;
    out.fibers += dv.fibers;
    out.contained += dv.contained;
  }
  const double k = static_cast<double>(ensemble.size());
  out.value = sum / k;
  const double spread = std::max(0.0, sumsq / k - out.value * out.value);
  out.std_error = std::sqrt(var / (k * k) + spread / k);
  return out;
}

VisibilityReport visibility(const Surface& Z, const Region& U, const SampleBudget& budget, const VisibilityOptions& options) {
  const int n = region_dim(U);
  const std::size_t k = options.directions ? options.directions : default_direction_count(n);
  const Mat dirs = sphere_directions(n, k, budget.seed);
  const Eigen::Index half = dirs.cols() / 2;
  std::vector<Surface> ensemble;
  if (options.mollify) ensemble = mollified_ensemble(Z, *options.mollify, budget.seed);
  Vec V(dirs.cols());
  parallel_for(static_cast<std::size_t>(half), [&](std::size_t i) {
    const auto col = static_cast<Eigen::Index>(i);
    const Vec u = dirs.col(col);
    double value = 0.0;
    if (ensemble.empty()) {
      value = directed_volume_fiber(Z, U, u, budget).value;
    } else {
      for (const auto& Zp : ensemble) value += directed_volume_fiber(Zp, U, u, budget).value;
      value /= static_cast<double>(ensemble.size());
    }
    V[col] = value;
    V[col + half] = value;  // V(-u) = V(u)
  });
  return visibility_from_directed(dirs, V, options.john);
}

Hyperplane hyperplane_through(const Vec& point, const Vec& normal) {
  const Vec N = normal.normalized();
  return Hyperplane{N, -N.dot(point)};
}

Surface to_surface(const Arrangement& arrangement) {
  std::vector<Poly> factors;
  factors.reserve(arrangement.size());
  for (const auto& h : arrangement) factors.push_back(Poly::linear(h.normal, h.offset));
  return Surface(std::move(factors));
}

namespace {

// Half-extent of a box along a unit normal; the plane misses the box when
// its distance from the centre exceeds it.
bool misses_box(const Hyperplane& h, const Box& b) {
  const Vec c = 0.5 * (b.lo + b.hi);
  const Vec half = 0.5 * (b.hi - b.lo);
  return std::abs(h.normal.dot(c) + h.offset) > h.normal.cwiseAbs().dot(half);
}

double planar_chord(const Hyperplane& h, const Region& region) {
  const Vec p = -h.offset * h.normal;
  Vec t(2);
  t << -h.normal[1], h.normal[0];
  const auto seg = clip_line(region, p, t);
  return seg ? std::max(0.0, seg->second - seg->first) : 0.0;
}

}  // namespace

double section_volume(const Hyperplane& h, const Region& region, const SampleBudget& budget) {
  const int n = region_dim(region);
  if (const auto* ball = std::get_if<Ball>(&region)) {
    const double dist = std::abs(h.normal.dot(ball->center) + h.offset);
    if (dist >= ball->radius) return 0.0;
    return unit_ball_volume(n - 1) * std::pow(ball->radius * ball->radius - dist * dist, 0.5 * (n - 1));
  }
  if (misses_box(h, bounding_box(region))) return 0.0;
  if (const auto* box = std::get_if<Box>(&region)) {
    Eigen::Index axis = 0;
    if (h.normal.cwiseAbs().maxCoeff(&axis) == 1.0) {
      // axis-aligned plane: the section is a face-parallel box
      const double side = box->hi[axis] - box->lo[axis];
      return (box->hi - box->lo).prod() / side;
    }
  }
  if (n == 2) return planar_chord(h, region);
  return directed_volume_fiber(Surface(Poly::linear(h.normal, h.offset)), region, h.normal, budget).value;
}

Vec arrangement_directed(const Arrangement& arrangement, const Region& region, const Mat& directions,
                         const SampleBudget& budget) {
  Vec V = Vec::Zero(directions.cols());
  for (const auto& h : arrangement) {
    const double area = section_volume(h, region, budget);
    if (area > 0.0) V += area * (directions.transpose() * h.normal).cwiseAbs();
  }
  return V;
}

namespace {

struct Score {
  double capped = -kUnbounded;  // sum_k log min(ratio_k, 1)
  double min_ratio = 0.0;
};

bool better(const Score& a, const Score& b) {
  if (a.capped > b.capped + 1e-12) return true;
  if (a.capped < b.capped - 1e-12) return false;
  return a.min_ratio > b.min_ratio;
}

Vec random_point_in(const Region& r, Engine& eng) {
  const Box bb = bounding_box(r);
  const Eigen::Index n = bb.lo.size();
  Vec x(n);
  for (int attempt = 0; attempt < 200; ++attempt) {
    for (Eigen::Index i = 0; i < n; ++i) x[i] = bb.lo[i] + (bb.hi[i] - bb.lo[i]) * uniform01(eng);
    if (region_contains(r, x)) return x;
  }
  return 0.5 * (bb.lo + bb.hi);
}

// Search state for one degree: section areas per (target, plane) and the
// resulting directed volumes on half of an antipodal direction set.
class ArrangementSearch {
 public:
  ArrangementSearch(const std::vector<VisibilityTarget>& targets, const Mat& half_dirs, const SampleBudget& budget)
      : targets_(targets), dirs_(half_dirs), budget_(budget), n_(static_cast<int>(half_dirs.rows())) {
    for (const auto& t : targets_) boxes_.push_back(bounding_box(t.region));
  }

  void reset(Arrangement arr) {
    arr_ = std::move(arr);
    const auto K = static_cast<Eigen::Index>(targets_.size());
    const auto d = static_cast<Eigen::Index>(arr_.size());
    areas_ = Mat::Zero(K, d);
    dots_.resize(dirs_.cols(), d);
    for (Eigen::Index i = 0; i < d; ++i) {
      dots_.col(i) = (dirs_.transpose() * arr_[static_cast<std::size_t>(i)].normal).cwiseAbs();
      for (Eigen::Index k = 0; k < K; ++k) areas_(k, i) = area(arr_[static_cast<std::size_t>(i)], k);
    }
    V_ = areas_ * dots_.transpose();  // K x dirs
    ratios_.resize(K);
    for (Eigen::Index k = 0; k < K; ++k) ratios_[k] = vis(V_.row(k)) / targets_[static_cast<std::size_t>(k)].M;
  }

  Score score() const { return score_of(ratios_); }
  const Arrangement& arrangement() const { return arr_; }
  const Vec& ratios() const { return ratios_; }

  /// Score after deleting plane i, without committing.
  Score score_without(std::size_t i) const {
    const auto col = static_cast<Eigen::Index>(i);
    Vec r = ratios_;
    for (Eigen::Index k = 0; k < r.size(); ++k)
      if (areas_(k, col) != 0.0)
        r[k] = vis(V_.row(k).transpose() - areas_(k, col) * dots_.col(col)) / targets_[static_cast<std::size_t>(k)].M;
    return score_of(r);
  }

  /// Replace plane i; keeps the change when the score does not get worse.
  bool propose(std::size_t i, const Hyperplane& h) {
    const auto col = static_cast<Eigen::Index>(i);
    const auto K = static_cast<Eigen::Index>(targets_.size());
    const Vec new_dots = (dirs_.transpose() * h.normal).cwiseAbs();
    Vec new_areas(K);
    for (Eigen::Index k = 0; k < K; ++k) new_areas[k] = area(h, k);
    Vec new_ratios = ratios_;
    std::vector<Eigen::Index> touched;
    for (Eigen::Index k = 0; k < K; ++k) {
      if (new_areas[k] == 0.0 && areas_(k, col) == 0.0) continue;
      touched.push_back(k);
      const Vec row = V_.row(k).transpose() + new_areas[k] * new_dots - areas_(k, col) * dots_.col(col);
      new_ratios[k] = vis(row) / targets_[static_cast<std::size_t>(k)].M;
    }
    if (better(score(), score_of(new_ratios))) return false;
    for (Eigen::Index k : touched) V_.row(k) += (new_areas[k] * new_dots - areas_(k, col) * dots_.col(col)).transpose();
    areas_.col(col) = new_areas;
    dots_.col(col) = new_dots;
    ratios_ = new_ratios;
    arr_[i] = h;
    return true;
  }

 private:
  double area(const Hyperplane& h, Eigen::Index k) const {
    if (misses_box(h, boxes_[static_cast<std::size_t>(k)])) return 0.0;
    return section_volume(h, targets_[static_cast<std::size_t>(k)].region, budget_);
  }

  double vis(const Vec& V) const {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < V.size(); ++j) acc += V[j] > 1.0 ? std::pow(V[j], -n_) : 1.0;
    return 1.0 / (unit_ball_volume(n_) * acc / static_cast<double>(V.size()));
  }

  static Score score_of(const Vec& ratios) {
    Score s;
    s.capped = 0.0;
    s.min_ratio = ratios.size() ? ratios.minCoeff() : kUnbounded;
    for (double r : ratios) s.capped += std::log(std::min(r, 1.0));
    return s;
  }

  const std::vector<VisibilityTarget>& targets_;
  std::vector<Box> boxes_;
  Mat dirs_;
  SampleBudget budget_;
  int n_;
  Arrangement arr_;
  Mat areas_;  // targets x planes
  Mat dots_;   // dirs x planes
  Mat V_;      // targets x dirs
  Vec ratios_;
};

Arrangement initial_arrangement(const std::vector<VisibilityTarget>& targets, int d, int n, Engine& eng) {
  std::vector<double> weights;
  double total = 0.0;
  for (const auto& t : targets) {
    weights.push_back(std::pow(std::max(t.M, 1e-12), 1.0 / n));
    total += weights.back();
  }
  Arrangement arr;
  for (int i = 0; i < d; ++i) {
    double pick = uniform01(eng) * total;
    std::size_t k = 0;
    while (k + 1 < weights.size() && pick >= weights[k]) pick -= weights[k++];
    arr.push_back(hyperplane_through(random_point_in(targets[k].region, eng), random_unit_vector(n, eng)));
  }
  return arr;
}

struct DegreeOutcome {
  Arrangement arrangement;
  Score score;
  Vec ratios;
};

DegreeOutcome search_degree(const std::vector<VisibilityTarget>& targets, int d, const SearchOptions& options,
                            const Mat& half_dirs, const SampleBudget& budget, const Arrangement* start = nullptr) {
  const int n = region_dim(targets.front().region);
  const int iterations = options.iterations > 0 ? options.iterations : 60 * d + 200;
  ArrangementSearch search(targets, half_dirs, budget);
  DegreeOutcome best;
  for (int r = 0; r < std::max(1, options.restarts); ++r) {
    Engine eng = make_engine(budget.seed, stream::kSearch, static_cast<std::uint64_t>(d) * 1000 + static_cast<std::uint64_t>(r));
    search.reset(start && r == 0 ? *start : initial_arrangement(targets, d, n, eng));
    for (int it = 0; it < iterations && search.score().min_ratio < 1.0; ++it) {
      Eigen::Index worst = 0;
      search.ratios().minCoeff(&worst);
      const auto i = static_cast<std::size_t>(uniform01(eng) * d);
      Hyperplane h;
      if (uniform01(eng) < 0.7) {
        h = hyperplane_through(random_point_in(targets[static_cast<std::size_t>(worst)].region, eng), random_unit_vector(n, eng));
      } else {
        const Hyperplane& cur = search.arrangement()[i];
        Vec N = cur.normal;
        for (auto& x : N) x += 0.3 * normal01(eng);
        Vec foot = -cur.offset * cur.normal;
        for (auto& x : foot) x += 0.2 * normal01(eng);
        h = hyperplane_through(foot, N);
      }
      search.propose(i, h);
    }
    if (best.arrangement.empty() || better(search.score(), best.score)) {
      best.arrangement = search.arrangement();
      best.score = search.score();
      best.ratios = search.ratios();
    }
    if (best.score.min_ratio >= 1.0) break;
  }
  // recompute from scratch to shed incremental rounding
  search.reset(best.arrangement);
  best.score = search.score();
  best.ratios = search.ratios();
  return best;
}

}  // namespace

SearchResult find_high_visibility_surface(const std::vector<VisibilityTarget>& targets, const SearchOptions& options,
                                          const SampleBudget& budget) {
  if (targets.empty()) throw Error(ErrorKind::ValidationError, "no visibility targets");
  const int n = region_dim(targets.front().region);
  double total = 0.0;
  for (const auto& t : targets) {
    if (region_dim(t.region) != n) throw Error(ErrorKind::ValidationError, "targets of mixed dimension");
    if (!(t.M >= 0.0)) throw Error(ErrorKind::ValidationError, "visibility targets must be non-negative");
    total += t.M;
  }
  const int start = std::max(1, static_cast<int>(std::ceil(std::pow(total, 1.0 / n) - 1e-9)));
  const int cap = options.d_cap > 0 ? options.d_cap : 2 * start;
  if (options.sweep && cap < start)
    throw Error(ErrorKind::ValidationError, "degree cap " + std::to_string(cap) + " is below the floor " + std::to_string(start));

  std::vector<int> degrees;
  if (options.sweep) {
    for (int d = start;; d = std::min(2 * d, cap)) {
      degrees.push_back(d);
      if (d == cap) break;
    }
  } else {
    degrees.push_back(cap);
  }

  const Mat dirs = sphere_directions(n, std::max<std::size_t>(4, options.directions), budget.seed);
  const Mat half = dirs.leftCols(dirs.cols() / 2);

  SearchResult result;
  DegreeOutcome chosen;
  for (int d : degrees) {
    result.degrees_tried.push_back(d);
    chosen = search_degree(targets, d, options, half, budget);
    result.degree = d;
    if (chosen.score.min_ratio >= 1.0) break;
  }
  if (options.shrink && chosen.score.min_ratio >= 1.0) {
    // drop the plane whose removal hurts least, then repair at the lower degree
    ArrangementSearch probe(targets, half, budget);
    while (chosen.arrangement.size() > 1) {
      probe.reset(chosen.arrangement);
      std::size_t drop = 0;
      Score best_drop;
      for (std::size_t i = 0; i < chosen.arrangement.size(); ++i) {
        const Score s = probe.score_without(i);
        if (i == 0 || better(s, best_drop)) best_drop = s, drop = i;
      }
      Arrangement smaller = chosen.arrangement;
      smaller.erase(smaller.begin() + static_cast<std::ptrdiff_t>(drop));
      const int d = static_cast<int>(smaller.size());
      const DegreeOutcome next = search_degree(targets, d, options, half, budget, &smaller);
      if (next.score.min_ratio < 1.0) break;
      chosen = next;
      result.degree = d;
    }
  }
  result.arrangement = chosen.arrangement;
  result.Z = to_surface(chosen.arrangement);
  result.min_ratio = chosen.score.min_ratio;
  result.success = result.min_ratio >= 1.0;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    TargetRow row;
    row.target = targets[k].M;
    row.ratio = chosen.ratios[static_cast<Eigen::Index>(k)];
    row.achieved = row.ratio * row.target;
    result.table.push_back(row);
  }
  if (options.validate) {
    VisibilityOptions vo;
    vo.directions = options.validate_directions;
    vo.mollify = options.mollify;
    vo.john = false;
    for (std::size_t k = 0; k < targets.size(); ++k)
      result.table[k].validated = visibility(result.Z, targets[k].region, budget.with_count(options.validate_fibers), vo).vis;
  }
  return result;
}

}  // namespace pk
