#include "pk/kakeya.hpp"

#include <algorithm>
#include <numeric>

namespace pk {

std::vector<int> TubeScene::counts() const {
  std::vector<int> out;
  for (const auto& f : families) out.push_back(static_cast<int>(f.size()));
  return out;
}

void validate(const TubeScene& scene) {
  if (scene.n < 2) throw Error(ErrorKind::ValidationError, "scene dimension must be at least 2");
  if (scene.S < 1) throw Error(ErrorKind::ValidationError, "scene side S must be a positive integer");
  if (static_cast<int>(scene.families.size()) != scene.n)
    throw Error(ErrorKind::ValidationError, "scene needs exactly n tube families");
  for (std::size_t j = 0; j < scene.families.size(); ++j)
    for (const auto& t : scene.families[j]) {
      if (t.dim() != scene.n || t.direction.size() != scene.n)
        throw Error(ErrorKind::ValidationError, "tube in family " + std::to_string(j) + " has wrong dimension");
      if (std::abs(t.direction.norm() - 1.0) > 1e-9 || !(t.radius > 0.0))
        throw Error(ErrorKind::ValidationError, "tube in family " + std::to_string(j) + " is malformed");
    }
}

std::vector<std::vector<Tube>> clipped_families(const TubeScene& scene) {
  const Cube cube = scene.cube();
  std::vector<std::vector<Tube>> out(scene.families.size());
  for (std::size_t j = 0; j < scene.families.size(); ++j)
    for (const auto& t : scene.families[j])
      if (auto c = clip_to_cube(t, cube)) out[j].push_back(*c);
  return out;
}

TubeScene lattice_scene(int n, int m, double spacing, double radius) {
  if (n < 2 || m < 1) throw Error(ErrorKind::ValidationError, "lattice scene needs n >= 2 and m >= 1");
  TubeScene scene;
  scene.n = n;
  scene.S = static_cast<int>(std::lround(spacing * m));
  scene.families.resize(static_cast<std::size_t>(n));
  std::size_t per_family = 1;
  for (int i = 0; i < n - 1; ++i) per_family *= static_cast<std::size_t>(m);
  for (int j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < per_family; ++k) {
      Vec core = Vec::Constant(n, 0.5 * scene.S);
      std::size_t rest = k;
      for (int i = 0; i < n; ++i) {
        if (i == j) continue;
        core[i] = spacing * (static_cast<double>(rest % static_cast<std::size_t>(m)) + 0.5);
        rest /= static_cast<std::size_t>(m);
      }
      scene.families[static_cast<std::size_t>(j)].push_back(make_tube(core, Vec::Unit(n, j), radius, kUnbounded, j));
    }
  }
  return scene;
}

TubeScene random_transverse_scene(int n, const std::vector<int>& counts, double theta_min, int S, std::uint64_t seed,
                                  double radius) {
  if (static_cast<int>(counts.size()) != n) throw Error(ErrorKind::ValidationError, "need one tube count per family");
  if (!(theta_min > 0.0 && theta_min <= 1.0)) throw Error(ErrorKind::ValidationError, "theta_min must lie in (0, 1]");
  Engine eng = make_engine(seed, stream::kScene);
  double spread = 0.1 + 0.9 * uniform01(eng);
  for (int attempt = 0; attempt < 60; ++attempt, spread *= 0.7) {
    TubeScene scene;
    scene.n = n;
    scene.S = S;
    scene.seed = seed;
    scene.families.resize(static_cast<std::size_t>(n));
    std::vector<std::vector<Vec>> dirs(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
      for (int a = 0; a < counts[static_cast<std::size_t>(j)]; ++a) {
        Vec d = Vec::Unit(n, j);
        for (int i = 0; i < n; ++i)
          if (i != j) d[i] = spread * (2.0 * uniform01(eng) - 1.0);
        d.normalize();
        Vec core(n);
        for (auto& x : core) x = S * uniform01(eng);
        scene.families[static_cast<std::size_t>(j)].push_back(make_tube(core, d, radius, kUnbounded, j));
        dirs[static_cast<std::size_t>(j)].push_back(d);
      }
    }
    if (min_determinant(dirs, seed).theta >= theta_min) return scene;
  }
  throw Error(ErrorKind::ValidationError, "could not reach the requested transversality");
}

CubeTable multiplicity_table(const TubeScene& scene, Contact contact) {
  validate(scene);
  const int n = scene.n;
  CubeTable table;
  table.lattice = CubeLattice::covering(scene.cube());
  const std::size_t cubes = table.lattice.size();
  table.M = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(cubes), n);
  table.tubes.assign(cubes, std::vector<std::vector<int>>(static_cast<std::size_t>(n)));
  const Cube cube = scene.cube();
  for (int j = 0; j < n; ++j) {
    const auto& family = scene.families[static_cast<std::size_t>(j)];
    for (std::size_t a = 0; a < family.size(); ++a) {
      const auto clipped = clip_to_cube(family[a], cube);
      if (!clipped) continue;
      for (std::size_t k : cubes_hit_by_tube(*clipped, table.lattice, contact)) {
        ++table.M(static_cast<Eigen::Index>(k), j);
        table.tubes[k][static_cast<std::size_t>(j)].push_back(static_cast<int>(a));
      }
    }
  }
  table.F.resize(cubes);
  for (std::size_t k = 0; k < cubes; ++k) {
    long long f = 1;
    for (int j = 0; j < n; ++j) f *= table.M(static_cast<Eigen::Index>(k), j);
    table.F[k] = f;
  }
  return table;
}

double kakeya_lhs(const CubeTable& table, int n) {
  if (n < 2) throw Error(ErrorKind::ValidationError, "the Kakeya functional needs n >= 2");
  double sum = 0.0;
  for (long long f : table.F)
    if (f > 0) sum += std::pow(static_cast<double>(f), 1.0 / (n - 1));
  return sum;
}

KakeyaRatio kakeya_ratio(const TubeScene& scene) {
  validate(scene);
  const int n = scene.n;
  KakeyaRatio out;
  out.A = scene.counts();
  std::vector<std::vector<Vec>> dirs(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j)
    for (const auto& t : scene.families[static_cast<std::size_t>(j)]) dirs[static_cast<std::size_t>(j)].push_back(t.direction);
  const auto det = min_determinant(dirs, scene.seed);
  out.theta = det.theta;
  out.theta_exhaustive = det.exhaustive;
  if (!(out.theta > 1e-12)) throw Error(ErrorKind::DegenerateTransversality, "minimal determinant across families is 0");
  out.lhs = kakeya_lhs(multiplicity_table(scene), n);
  const double e = 1.0 / (n - 1);
  out.rhs_core = std::pow(out.theta, -e);
  for (int a : out.A) out.rhs_core *= std::pow(static_cast<double>(a), e);
  out.ratio = out.lhs / out.rhs_core;
  return out;
}

namespace {

void check_near_axis(const TubeScene& scene) {
  const double limit = 1.0 / (100.0 * scene.n);
  for (int j = 0; j < scene.n; ++j)
    for (const auto& t : scene.families[static_cast<std::size_t>(j)]) {
      const Vec e = Vec::Unit(scene.n, j);
      if (std::min((t.direction - e).norm(), (t.direction + e).norm()) >= limit)
        throw Error(ErrorKind::HypothesisViolated,
                    "a tube of family " + std::to_string(j) + " is not within 1/(100n) of its axis");
    }
}

}  // namespace

VolumeEstimate theorem1_volume(const TubeScene& scene, const SampleBudget& budget) {
  validate(scene);
  check_near_axis(scene);
  const auto families = clipped_families(scene);
  for (const auto& f : families)
    if (f.empty()) return {0.0, 0.0, budget.count};
  const Cube cube = scene.cube();
  return estimate_volume(
      [&](const Vec& x) {
        for (const auto& f : families)
          if (std::none_of(f.begin(), f.end(), [&](const Tube& t) { return t.contains(x); })) return false;
        return true;
      },
      cube.lo(), cube.hi(), budget);
}

namespace {

template <class F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("stage ") + stage + ": " + e.detail());
  }
}

}  // namespace

Theorem1Trace theorem1_trace(const TubeScene& scene, const SampleBudget& budget, const TraceOptions& options) {
  const int n = scene.n;
  Theorem1Trace tr;
  CubeTable table;
  std::vector<std::vector<Tube>> tubes;
  staged("cubes", [&] {
    validate(scene);
    check_near_axis(scene);
    table = multiplicity_table(scene);
    tubes = clipped_families(scene);
    for (std::size_t k = 0; k < table.size(); ++k)
      if (table.F[k] > 0) tr.cubes.push_back(k);
    tr.V = tr.cubes.size();
    for (int a : scene.counts()) tr.A = std::max(tr.A, a);
    if (tr.V == 0) throw Error(ErrorKind::ValidationError, "no cube meets every family");
    return 0;
  });

  staged("bisect", [&] {
    tr.degree = stone_tukey_degree(n, tr.V);
    if (options.d_cap > 0) tr.degree = std::min(tr.degree, options.d_cap);
    tr.degree_ratio = tr.degree / std::pow(static_cast<double>(tr.V), 1.0 / n);
    BisectionProblem problem;
    problem.degree = tr.degree;
    problem.tolerance = options.tolerance;
    for (std::size_t k : tr.cubes) problem.sets.push_back(to_box(table.lattice.cube(k)));
    tr.bisection = solve_bisection(problem, budget.with_count(options.bisect_samples));
    if (!tr.bisection.success)
      throw Error(ErrorKind::Stalled, "worst defect " + std::to_string(tr.bisection.defects.cwiseAbs().maxCoeff()) +
                                          " above tolerance");
    return 0;
  });
  const Surface Z(tr.bisection.P);
  const SampleBudget fb = budget.with_count(options.fibers);

  std::vector<double> beta_error(tr.V, 0.0);
  staged("directions", [&] {
    tr.rows.resize(tr.V);
    parallel_for(tr.V, [&](std::size_t i) {
      const std::size_t k = tr.cubes[i];
      const Region Q = to_box(table.lattice.cube(k));
      TraceCube row;
      row.cube = k;
      row.beta = -1.0;
      for (int j = 0; j < n; ++j)
        for (int a : table.tubes[k][static_cast<std::size_t>(j)]) {
          const Vec& v = scene.families[static_cast<std::size_t>(j)][static_cast<std::size_t>(a)].direction;
          const auto dv = options.mollify ? mollified_directed_volume(Z, Q, v, *options.mollify, fb)
                                          : directed_volume_fiber(Z, Q, v, fb);
          if (dv.value > row.beta) {
            row.beta = dv.value;
            row.family = j;
            row.tube = a;
            beta_error[i] = dv.std_error;
          }
        }
      row.area = surface_integral(Z, Q, [](const Vec&, const Vec&) { return 1.0; }, fb, SurfaceScheme::Lines).value;
      tr.rows[i] = row;
    });
    tr.beta_min = kUnbounded;
    for (const auto& r : tr.rows) tr.beta_min = std::min(tr.beta_min, r.beta);
    if (!(tr.beta_min > 0.0)) throw Error(ErrorKind::HypothesisViolated, "a bisected cube has no directed volume");
    return 0;
  });

  std::vector<std::size_t> best_rows;
  staged("pigeonhole", [&] {
    std::vector<std::vector<std::size_t>> assigned(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) assigned[static_cast<std::size_t>(j)].assign(scene.families[static_cast<std::size_t>(j)].size(), 0);
    for (const auto& r : tr.rows) ++assigned[static_cast<std::size_t>(r.family)][static_cast<std::size_t>(r.tube)];
    for (int j = 0; j < n; ++j)
      for (std::size_t a = 0; a < assigned[static_cast<std::size_t>(j)].size(); ++a)
        if (assigned[static_cast<std::size_t>(j)][a] > tr.best_count) {
          tr.best_count = assigned[static_cast<std::size_t>(j)][a];
          tr.best_family = j;
          tr.best_tube = static_cast<int>(a);
        }
    tr.pigeonhole = static_cast<double>(tr.V) / (n * tr.A);
    for (std::size_t i = 0; i < tr.rows.size(); ++i)
      if (tr.rows[i].family == tr.best_family && tr.rows[i].tube == tr.best_tube) best_rows.push_back(i);
    return 0;
  });

  staged("cylinder", [&] {
    const Tube& base = scene.families[static_cast<std::size_t>(tr.best_family)][static_cast<std::size_t>(tr.best_tube)];
    const auto clipped = clip_to_cube(base, scene.cube());
    if (!clipped) throw Error(ErrorKind::ValidationError, "chosen tube misses the scene");
    const double grow = std::sqrt(static_cast<double>(n));
    const Tube enlarged = make_tube(clipped->core_point, clipped->direction, clipped->radius + grow,
                                    clipped->length + 2.0 * grow);
    const auto dv = directed_volume_fiber(Z, enlarged, enlarged.direction, budget.with_count(4 * options.fibers));
    tr.enlarged = dv.value;
    tr.enlarged_error = dv.std_error;
    tr.cylinder = cylinder_bound(n, enlarged.radius, tr.degree);
    double var = dv.std_error * dv.std_error;
    for (std::size_t i : best_rows) {
      tr.sum_best += tr.rows[i].beta;
      var += beta_error[i] * beta_error[i];
    }
    const double root = std::pow(static_cast<double>(tr.V), 1.0 / n);
    tr.lhs = static_cast<double>(tr.V) / tr.A;
    tr.c = n * tr.cylinder / tr.degree * tr.degree_ratio / tr.beta_min;
    tr.rhs = tr.c * root;
    tr.chain_holds = static_cast<double>(tr.best_count) >= tr.pigeonhole &&
                     tr.sum_best >= static_cast<double>(tr.best_count) * tr.beta_min &&
                     tr.sum_best <= tr.enlarged + 3.0 * std::sqrt(var) &&
                     tr.enlarged <= tr.cylinder * (1 + 1e-12) + 3.0 * dv.std_error;
    tr.holds = tr.lhs <= tr.rhs;
    return 0;
  });
  return tr;
}

Arrangement coordinate_planes(const TubeScene& scene) {
  Arrangement arr;
  for (int j = 0; j < scene.n; ++j)
    for (int k = 0; k < scene.S; ++k) arr.push_back(Hyperplane{Vec::Unit(scene.n, j), -(k + 0.5)});
  return arr;
}

Arrangement augmentation_planes(const TubeScene& scene) {
  Arrangement arr;
  for (int j = 0; j < scene.n; ++j)
    for (int k = 0; k < scene.S; ++k)
      for (double off : {0.25, 0.75}) arr.push_back(Hyperplane{Vec::Unit(scene.n, j), -(k + off)});
  return arr;
}

TubeScene lemma61_scene(int n, double theta, std::uint64_t seed) {
  if (!(theta > 0.0 && theta <= 1.0)) throw Error(ErrorKind::ValidationError, "theta must lie in (0, 1]");
  Engine eng = make_engine(seed, stream::kScene);
  TubeScene scene;
  scene.n = n;
  scene.S = 8;
  scene.seed = seed;
  scene.families.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    Vec d = Vec::Unit(n, j);
    if (j == n - 1 && n > 1) {
      d = Vec::Zero(n);
      d[0] = std::sqrt(1.0 - theta * theta);
      d[n - 1] = theta;
    }
    const int count = 1 + static_cast<int>(uniform01(eng) * 3);
    for (int a = 0; a < count; ++a) {
      Vec core(n);
      for (auto& x : core) x = 3.0 + 2.0 * uniform01(eng);
      scene.families[static_cast<std::size_t>(j)].push_back(make_tube(core, d, 0.5, kUnbounded, j));
    }
  }
  return scene;
}

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Volume of conv(+-columns) by the shoelace formula (n = 2) or by the eight
// origin tetrahedra over the faces (n = 3).
double symmetric_hull_volume(const Mat& v) {
  const auto n = v.rows();
  if (n == 2) {
    std::vector<Vec> pts{v.col(0), v.col(1), -v.col(0), -v.col(1)};
    std::sort(pts.begin(), pts.end(), [](const Vec& a, const Vec& b) { return std::atan2(a[1], a[0]) < std::atan2(b[1], b[0]); });
    double area = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Vec& p = pts[i];
      const Vec& q = pts[(i + 1) % pts.size()];
      area += p[0] * q[1] - p[1] * q[0];
    }
    return 0.5 * std::abs(area);
  }
  if (n == 3) {
    double vol = 0.0;
    for (int s = 0; s < 8; ++s) {
      Eigen::Matrix3d m;
      for (int j = 0; j < 3; ++j) m.col(j) = ((s >> j) & 1 ? -1.0 : 1.0) * v.col(j);
      vol += std::abs(m.determinant()) / 6.0;
    }
    return vol;
  }
  return std::pow(2.0, static_cast<double>(n)) / factorial(static_cast<int>(n)) * std::abs(v.determinant());
}

}  // namespace

Lemma61Report lemma61_check(const TubeScene& scene, const Arrangement& Z0, const SampleBudget& budget,
                            const Lemma61Options& options) {
  validate(scene);
  const int n = scene.n;
  Arrangement Z = Z0;
  if (options.augment) {
    const auto extra = augmentation_planes(scene);
    Z.insert(Z.end(), extra.begin(), extra.end());
  }
  const CubeTable table = multiplicity_table(scene);
  std::vector<std::vector<Vec>> dirs(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j)
    for (const auto& t : scene.families[static_cast<std::size_t>(j)]) dirs[static_cast<std::size_t>(j)].push_back(t.direction);
  Lemma61Report report;
  report.theta = min_determinant(dirs, scene.seed).theta;
  if (!(report.theta > 1e-12)) throw Error(ErrorKind::DegenerateTransversality, "minimal determinant across families is 0");
  report.bound = factorial(n) / std::pow(2.0, n);

  const Mat sphere = sphere_directions(n, options.directions, budget.seed);
  for (std::size_t k = 0; k < table.size(); ++k) {
    if (table.F[k] == 0) continue;
    const Region Q = to_box(table.lattice.cube(k));
    std::vector<std::pair<double, Vec>> areas;  // section area, normal
    for (const auto& h : Z)
      if (const double a = section_volume(h, Q, budget); a > 0.0) areas.push_back({a, h.normal});
    auto V = [&](const Vec& v) {
      double s = 0.0;
      for (const auto& [a, N] : areas) s += a * std::abs(v.dot(N));
      return s;
    };
    Vec Vs(sphere.cols());
    for (Eigen::Index i = 0; i < sphere.cols(); ++i) Vs[i] = V(sphere.col(i));
    if (Vs.minCoeff() < 1.0 - 1e-9)
      throw Error(ErrorKind::PrerequisiteViolated, "directed volume " + std::to_string(Vs.minCoeff()) +
                                                       " < 1 on cube " + std::to_string(k));
    Lemma61Row row;
    row.cube = k;
    row.vis = visibility_from_directed(sphere, Vs, false).vis;
    Mat vprime(n, n);
    row.product = 1.0 / report.theta;
    for (int j = 0; j < n; ++j) {
      double best = kUnbounded;
      Vec bv;
      for (int a : table.tubes[k][static_cast<std::size_t>(j)]) {
        const Vec& v = dirs[static_cast<std::size_t>(j)][static_cast<std::size_t>(a)];
        if (const double x = V(v); x < best) {
          best = x;
          bv = v;
        }
      }
      row.product *= best;
      vprime.col(j) = bv / best;
    }
    row.ratio = row.vis / row.product;
    row.det = std::abs(vprime.determinant());
    row.hull_volume = symmetric_hull_volume(vprime);
    const double formula = std::pow(2.0, n) / factorial(n) * row.det;
    row.identity_error = std::abs(row.hull_volume - formula) / std::max(row.hull_volume, 1e-300);
    report.max_ratio = std::max(report.max_ratio, row.ratio);
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace pk
