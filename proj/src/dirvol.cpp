#include "pk/dirvol.hpp"

namespace pk {

namespace {

struct FiberCount {
  int hits = 0;
  int contained_degree = 0;
};

// Intersections of one fiber with every factor on the closed interval [t0, t1].
FiberCount count_fiber(const Surface& Z, const Vec& p, const Vec& u, double t0, double t1) {
  FiberCount out;
  const double pad = 1e-12 * std::max(1.0, t1 - t0);
  for (const auto& F : Z.factors()) {
    const double ref = F.max_abs_coeff();
    if (F.degree() <= 1) {
      // q(t) = c0 + c1 t without building the univariate polynomial
      const double c0 = F(p);
      const double c1 = F.degree() == 1 ? F(Vec(p + u)) - c0 : 0.0;
      if (std::max(std::abs(c0), std::abs(c1)) < SturmSequence<double>::kContainedTol * ref) {
        out.contained_degree += F.degree();
        continue;
      }
      if (c1 == 0.0) continue;
      const double t = -c0 / c1;
      if (t > t0 - pad && t <= t1) ++out.hits;
      continue;
    }
    const SturmSequence<double> s(restrict_to_line(F, p, u), t0 - pad, t1, ref);
    if (s.line_contained()) out.contained_degree += F.degree();
    else out.hits += s.count();
  }
  return out;
}

}  // namespace

DirectedVolume directed_volume_fiber(const Surface& Z, const Region& region, const Vec& v, const SampleBudget& budget) {
  const int n = region_dim(region);
  if (Z.dim() != n || v.size() != n) throw Error(ErrorKind::ValidationError, "dimension mismatch in directed volume");
  if (n < 2) throw Error(ErrorKind::ValidationError, "directed volume needs n >= 2");
  const double norm = v.norm();
  if (!(norm > 0.0)) throw Error(ErrorKind::ValidationError, "direction must be nonzero");
  Vec u = v / norm;
  // canonical orientation: u and -u use identical fibers
  for (int i = 0; i < n; ++i) {
    if (u[i] == 0.0) continue;
    if (u[i] > 0.0) u = -u;
    break;
  }
  const Mat basis = orthogonal_complement(u);
  const auto [plo, phi] = projected_extent(region, basis);
  const double area = (phi - plo).prod();
  const BoxSampler sampler(plo, phi, budget.count, budget.stratified);

  std::vector<FiberCount> counts(budget.count);
  parallel_for(sampler.blocks(), [&](std::size_t b) {
    Mat ys;
    sampler.block(b, budget.seed, stream::kFiber, ys);
    for (Eigen::Index s = 0; s < ys.cols(); ++s) {
      const Vec p = basis * ys.col(s);
      FiberCount c;
      if (auto seg = clip_line(region, p, u); seg && seg->second > seg->first) c = count_fiber(Z, p, u, seg->first, seg->second);
      counts[b * kBlockSize + static_cast<std::size_t>(s)] = c;
    }
  });

  DirectedVolume out;
  out.fibers = budget.count;
  for (const auto& c : counts)
    if (c.contained_degree > 0) ++out.contained;
  const bool keep_contained = static_cast<double>(out.contained) > 1e-3 * static_cast<double>(budget.count);
  double sum = 0.0, sumsq = 0.0;
  for (const auto& c : counts) {
    const double x = c.hits + (keep_contained ? c.contained_degree : 0);
    sum += x;
    sumsq += x * x;
  }
  const double m = static_cast<double>(budget.count);
  const double mean = sum / m;
  const double var = std::max(0.0, sumsq / m - mean * mean);
  out.value = area * mean * norm;
  out.std_error = area * std::sqrt(var / m) * norm;
  return out;
}

DirectedVolume directed_volume_surface(const Surface& Z, const Region& region, const Vec& v, const SampleBudget& budget,
                                       SurfaceScheme scheme) {
  const auto est = surface_integral(
      Z, region, [&](const Vec&, const Vec& N) { return std::abs(v.dot(N)); }, budget, scheme);
  DirectedVolume out;
  out.value = est.value;
  out.std_error = est.std_error;
  out.fibers = est.count;
  return out;
}

double cylinder_bound(int n, double r, int d) {
  if (n < 1) throw Error(ErrorKind::ValidationError, "dimension must be positive");
  return unit_ball_volume(n - 1) * std::pow(r, n - 1) * d;
}

AxisSumReport axis_sum_lower_bound_check(const Surface& Z, const Region& region, const std::vector<Vec>& v,
                                         const SampleBudget& budget) {
  const int n = region_dim(region);
  if (static_cast<int>(v.size()) != n) throw Error(ErrorKind::ValidationError, "need one direction per axis");
  for (int j = 0; j < n; ++j) {
    if (v[static_cast<std::size_t>(j)].size() != n) throw Error(ErrorKind::ValidationError, "direction has wrong dimension");
    if ((Vec::Unit(n, j) - v[static_cast<std::size_t>(j)]).norm() >= 1.0 / (100.0 * n))
      throw Error(ErrorKind::HypothesisViolated, "direction " + std::to_string(j) + " is not within 1/(100n) of its axis");
  }
  AxisSumReport out;
  const auto vol = surface_integral(Z, region, [](const Vec&, const Vec&) { return 1.0; }, budget, SurfaceScheme::Lines);
  out.volume = vol.value;
  out.volume_error = vol.std_error;
  double var = 0.0;
  for (const auto& vj : v) {
    const auto dv = directed_volume_fiber(Z, region, vj, budget);
    out.axis_sum += dv.value;
    var += dv.std_error * dv.std_error;
  }
  out.axis_sum_error = std::sqrt(var);
  const double combined = std::sqrt(out.volume_error * out.volume_error + 4.0 * var);
  out.holds = out.volume <= 2.0 * out.axis_sum + 3.0 * combined;
  return out;
}

}  // namespace pk
