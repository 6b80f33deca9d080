#include "pk/cli.hpp"

#include "pk/io.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace pk::cli {

namespace {

using io::SceneFile;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + std::to_string(v[i]);
  return s;
}

std::string join(const Vec& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ";" : "") + num(v[i]);
  return s;
}

struct Report {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::string failure;  // non-empty: stage failure after the report was written

  static std::string cell(const std::string& c) {
    if (c.find_first_of(",\"\n") == std::string::npos) return c;
    std::string q = "\"";
    for (char ch : c) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  }

  std::string csv() const {
    std::string s;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) s += (i ? "," : "") + cell(cells[i]);
      s += "\n";
    };
    line(header);
    for (const auto& r : rows) line(r);
    return s;
  }
};

// Flag values; unset ones leave the scene file untouched.
struct Overrides {
  std::string scene_path;
  std::string poly_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples, fibers, directions;
  std::optional<int> degree, d_cap;
  std::optional<double> tolerance, L;
  std::vector<double> sigma;
};

void add_common(CLI::App* app, Overrides& o, bool poly) {
  app->add_option("--scene", o.scene_path, "scene file (JSON, version 1)")->required();
  if (poly) app->add_option("--poly", o.poly_path, "polynomial file; overrides params.poly");
  app->add_option("--seed", o.seed, "random seed");
  app->add_option("--samples", o.samples, "Monte Carlo samples or sample points");
  app->add_option("--fibers", o.fibers, "fibers per directed volume");
  app->add_option("--directions", o.directions, "sphere directions");
  app->add_option("--degree", o.degree, "polynomial degree");
  app->add_option("--d-cap", o.d_cap, "degree cap");
  app->add_option("--tolerance", o.tolerance, "relative tolerance");
  app->add_option("--L", o.L, "tube length for box fields");
  app->add_option("--sigma", o.sigma, "dilations for box containment")->delimiter(',');
}

SceneFile load(const Overrides& o) {
  SceneFile s = io::load_scene(o.scene_path);
  if (o.seed) s.seed = *o.seed;
  auto& p = s.params;
  if (o.samples) p.samples = *o.samples;
  if (o.fibers) p.fibers = *o.fibers;
  if (o.directions) p.directions = *o.directions;
  if (o.degree) p.degree = *o.degree;
  if (o.d_cap) p.d_cap = *o.d_cap;
  if (o.tolerance) p.tolerance = *o.tolerance;
  if (o.L) p.L = *o.L;
  if (!o.sigma.empty()) p.sigma = o.sigma;
  if (!o.poly_path.empty()) p.poly = io::load_poly(o.poly_path);
  return s;
}

SampleBudget budget_of(const SceneFile& s, std::size_t default_count) {
  return SampleBudget{s.seed, s.params.samples.value_or(default_count), true};
}

std::vector<std::string> prefix(const SceneFile& s, std::uint64_t hash) { return {std::to_string(s.seed), io::hex(hash)}; }

const Surface& need_poly(const SceneFile& s) {
  if (!s.params.poly) throw Error(ErrorKind::ValidationError, "no polynomial: give --poly or params.poly");
  return *s.params.poly;
}

const std::vector<Region>& need_regions(const SceneFile& s) {
  if (s.params.regions.empty()) throw Error(ErrorKind::ValidationError, "no regions: give params.regions");
  return s.params.regions;
}

Report hamsandwich(const SceneFile& s, std::uint64_t hash) {
  std::vector<Region> sets = s.params.regions;
  if (sets.empty()) sets = random_disjoint_balls(s.n, s.params.disks.value_or(5), s.S.value_or(8), s.seed);
  BisectionProblem problem{sets, s.params.degree.value_or(stone_tukey_degree(s.n, sets.size())),
                           s.params.tolerance.value_or(0.01)};
  const auto r = solve_bisection(problem, budget_of(s, 1 << 16));
  Report rep{{"seed", "scene_hash", "degree", "set", "region", "volume", "defect", "restart", "success"}, {}, {}};
  for (std::size_t i = 0; i < sets.size(); ++i) {
    auto row = prefix(s, hash);
    const auto k = static_cast<Eigen::Index>(i);
    row.insert(row.end(), {std::to_string(problem.degree), std::to_string(i), describe(sets[i]), num(r.volumes[k]),
                           num(r.defects[k]), std::to_string(r.restart), r.success ? "1" : "0"});
    rep.rows.push_back(row);
  }
  if (!r.success)
    rep.failure = "Stalled: worst defect " + num(r.defects.cwiseAbs().maxCoeff()) + " above tolerance " + num(problem.tolerance);
  return rep;
}

Report dirvol(const SceneFile& s, std::uint64_t hash) {
  const Surface& Z = need_poly(s);
  std::vector<Vec> vs = s.params.vectors;
  if (vs.empty())
    for (int j = 0; j < s.n; ++j) vs.push_back(Vec::Unit(s.n, j));
  const SampleBudget fibers{s.seed, s.params.fibers.value_or(1 << 14), true};
  const SampleBudget lines{s.seed, s.params.samples.value_or(1 << 16), true};
  Report rep{{"seed", "scene_hash", "region", "direction", "fiber", "fiber_error", "surface", "surface_error"}, {}, {}};
  const auto& regions = need_regions(s);
  for (std::size_t k = 0; k < regions.size(); ++k)
    for (const auto& v : vs) {
      const auto f = directed_volume_fiber(Z, regions[k], v, fibers);
      const auto g = directed_volume_surface(Z, regions[k], v, lines, SurfaceScheme::Lines);
      auto row = prefix(s, hash);
      row.insert(row.end(), {std::to_string(k), join(v), num(f.value), num(f.std_error), num(g.value), num(g.std_error)});
      rep.rows.push_back(row);
    }
  return rep;
}

Report visibility_cmd(const SceneFile& s, std::uint64_t hash) {
  const Surface& Z = need_poly(s);
  VisibilityOptions o;
  o.directions = s.params.directions.value_or(0);
  o.mollify = s.params.mollify;
  const SampleBudget fibers{s.seed, s.params.fibers.value_or(1 << 12), true};
  Report rep{{"seed", "scene_hash", "region", "vis", "body_volume", "john_volume", "john_degenerate"}, {}, {}};
  const auto& regions = need_regions(s);
  for (std::size_t k = 0; k < regions.size(); ++k) {
    const auto r = visibility(Z, regions[k], fibers, o);
    auto row = prefix(s, hash);
    row.insert(row.end(), {std::to_string(k), num(r.vis), num(r.volume), num(r.john_degenerate ? 0.0 : r.john.volume()),
                           r.john_degenerate ? "1" : "0"});
    rep.rows.push_back(row);
  }
  return rep;
}

// M(Q_k) = ceil(S^n F^{1/(n-1)} / sum_k F^{1/(n-1)}) on the cubes with F > 0.
std::vector<VisibilityTarget> scene_targets(const TubeScene& scene) {
  const auto t = multiplicity_table(scene);
  const double e = 1.0 / (scene.n - 1);
  double total = 0.0;
  for (long long f : t.F) total += std::pow(static_cast<double>(f), e);
  std::vector<VisibilityTarget> out;
  if (total <= 0.0) return out;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t.F[k] <= 0) continue;
    const double M = std::pow(scene.S, scene.n) * std::pow(static_cast<double>(t.F[k]), e) / total;
    out.push_back({to_box(t.lattice.cube(k)), std::ceil(M - 1e-9)});
  }
  return out;
}

Report vissearch(const SceneFile& s, std::uint64_t hash) {
  std::vector<VisibilityTarget> targets = s.params.targets;
  if (targets.empty()) targets = scene_targets(io::materialize(s));
  if (targets.empty()) throw Error(ErrorKind::ValidationError, "no visibility targets: the scene has no cube met by every family");
  SearchOptions o;
  o.d_cap = s.params.d_cap.value_or(0);
  o.directions = s.params.directions.value_or(128);
  o.validate = false;
  const auto r = find_high_visibility_surface(targets, o, budget_of(s, 1 << 12));
  Report rep{{"seed", "scene_hash", "degree", "target", "region", "M", "achieved", "ratio", "success"}, {}, {}};
  for (std::size_t k = 0; k < targets.size(); ++k) {
    auto row = prefix(s, hash);
    row.insert(row.end(), {std::to_string(r.degree), std::to_string(k), describe(targets[k].region), num(targets[k].M),
                           num(r.table[k].achieved), num(r.table[k].ratio), r.success ? "1" : "0"});
    rep.rows.push_back(row);
  }
  if (!r.success) rep.failure = "Stalled: min ratio " + num(r.min_ratio) + " below 1 up to degree " + std::to_string(r.degree);
  return rep;
}

Report kakeya_t1(const SceneFile& s, std::uint64_t hash) {
  const TubeScene scene = io::materialize(s);
  const auto v = theorem1_volume(scene, budget_of(s, 1 << 18));
  const auto A = scene.counts();
  double prod = 1.0;
  for (int a : A) prod *= std::pow(a, 1.0 / (scene.n - 1));
  Report rep{{"seed", "scene_hash", "n", "A", "volume", "std_error", "scaled"}, {}, {}};
  auto row = prefix(s, hash);
  row.insert(row.end(), {std::to_string(scene.n), join(A), num(v.value), num(v.std_error), num(prod > 0 ? v.value / prod : 0.0)});
  rep.rows.push_back(row);
  return rep;
}

Report kakeya_t2(const SceneFile& s, std::uint64_t hash) {
  const auto r = kakeya_ratio(io::materialize(s));
  Report rep{{"seed", "scene_hash", "n", "A", "theta", "lhs", "rhs_core", "ratio"}, {}, {}};
  auto row = prefix(s, hash);
  row.insert(row.end(), {std::to_string(s.n), join(r.A), num(r.theta), num(r.lhs), num(r.rhs_core), num(r.ratio)});
  rep.rows.push_back(row);
  return rep;
}

Report kakeya_trace(const SceneFile& s, std::uint64_t hash) {
  TraceOptions o;
  o.d_cap = s.params.d_cap.value_or(0);
  o.tolerance = s.params.tolerance.value_or(o.tolerance);
  if (s.params.fibers) o.fibers = *s.params.fibers;
  const auto t = theorem1_trace(io::materialize(s), budget_of(s, 1 << 16), o);
  Report rep{{"seed", "scene_hash", "V", "A", "degree", "beta_min", "best_count", "pigeonhole", "sum_best", "enlarged",
              "cylinder", "lhs", "c", "rhs", "chain_holds", "holds"},
             {}, {}};
  auto row = prefix(s, hash);
  row.insert(row.end(), {std::to_string(t.V), std::to_string(t.A), std::to_string(t.degree), num(t.beta_min),
                         std::to_string(t.best_count), num(t.pigeonhole), num(t.sum_best), num(t.enlarged), num(t.cylinder),
                         num(t.lhs), num(t.c), num(t.rhs), t.chain_holds ? "1" : "0", t.holds ? "1" : "0"});
  rep.rows.push_back(row);
  if (!t.holds) rep.failure = "stage cylinder: V/A exceeds c V^(1/n)";
  return rep;
}

Report boxes(const SceneFile& s, std::uint64_t hash) {
  const TubeScene scene = io::materialize(s);
  TubeUnion X;
  for (const auto& f : scene.families) X.insert(X.end(), f.begin(), f.end());
  double L = 0.0;
  for (const auto& t : X) L = std::max(L, t.length);
  L = s.params.L.value_or(L);
  const SampleBudget budget = budget_of(s, 1 << 16);
  BoxFieldOptions o;
  if (s.params.directions) o.directions = *s.params.directions;
  const BoxField field = build_box_field(X, L, budget, o);
  const std::vector<double> sigmas = s.params.sigma.empty() ? std::vector<double>{5, 10, 20, 40} : s.params.sigma;
  const SampleBudget points{s.seed, s.params.fibers.value_or(400), true};
  Report rep{{"seed", "scene_hash", "tube", "L", "degree", "volume_X", "sigma", "fraction"}, {}, {}};
  for (std::size_t i = 0; i < X.size(); ++i) {
    auto req = required_sigmas(X[i], field, points);
    for (double sigma : sigmas) {
      const auto ok = std::count_if(req.begin(), req.end(), [&](double v) { return v <= sigma; });
      auto row = prefix(s, hash);
      row.insert(row.end(), {std::to_string(i), num(L), std::to_string(field.arrangement.size()), num(field.volume_X),
                             num(sigma), num(req.empty() ? 1.0 : static_cast<double>(ok) / static_cast<double>(req.size()))});
      rep.rows.push_back(row);
    }
  }
  return rep;
}

std::string indent(const std::string& text) {
  std::string out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out += "  " + line + "\n";
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Polynomial-method Kakeya experiments", "polykakeya"};
  app.require_subcommand(1);
  unsigned threads = 0;
  std::string out_dir = ".";
  bool quiet = false;
  app.add_option("--threads", threads, "worker threads (0: hardware); results do not depend on it");
  app.add_option("--out", out_dir, "directory for the CSV report and manifest");
  app.add_flag("--quiet", quiet, "do not echo the CSV to standard output");
  app.set_version_flag("--version", kVersion);

  Overrides o;
  std::string command;
  std::function<Report(const SceneFile&, std::uint64_t)> action;
  auto sub = [&](CLI::App* parent, const char* name, const char* help, bool poly, auto fn, std::string label) {
    CLI::App* c = parent->add_subcommand(name, help);
    add_common(c, o, poly);
    c->callback([&, fn, label] {
      command = label;
      action = fn;
    });
    return c;
  };
  sub(&app, "hamsandwich", "bisect several regions with one surface", false, hamsandwich, "hamsandwich");
  sub(&app, "dirvol", "directed volumes by fibers and by the surface integral", true, dirvol, "dirvol");
  sub(&app, "visibility", "visibility of a surface in regions", true, visibility_cmd, "visibility");
  sub(&app, "vissearch", "search a surface with large visibility on targets", false, vissearch, "vissearch");
  CLI::App* kakeya = app.add_subcommand("kakeya", "tube-scene estimates");
  kakeya->require_subcommand(1);
  sub(kakeya, "t1", "volume of the intersection of tube unions", false, kakeya_t1, "kakeya_t1");
  sub(kakeya, "t2", "lattice Kakeya ratio", false, kakeya_t2, "kakeya_t2");
  sub(kakeya, "trace", "staged trace of the volume argument", false, kakeya_trace, "kakeya_trace");
  sub(&app, "boxes", "box field containment fractions", false, boxes, "boxes");

  std::vector<const char*> argv{"polykakeya"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    set_max_threads(threads);
    const SceneFile scene = load(o);
    const std::string normalized = io::serialize_scene(scene);
    const std::uint64_t hash = io::fnv1a(normalized);
    const Report rep = action(scene, hash);
    const std::string csv = rep.csv();
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const fs::path csv_path = fs::path(out_dir) / (command + ".csv");
    const fs::path manifest_path = fs::path(out_dir) / (command + ".manifest");
    std::ofstream(csv_path, std::ios::binary) << csv;
    std::ofstream(manifest_path, std::ios::binary)
        << "command: " << command << "\n"
        << "version: " << kVersion << "\n"
        << "scene: " << o.scene_path << "\n"
        << "scene_hash: " << io::hex(hash) << "\n"
        << "seed: " << scene.seed << "\n"
        << "threads: " << max_threads() << "\n"
        << "rows: " << rep.rows.size() << "\n"
        << "report: " << csv_path.string() << "\n"
        << "status: " << (rep.failure.empty() ? "ok" : "stage failure") << "\n"
        << "wall_time_s: " << num(wall) << "\n"
        << "inputs: |\n"
        << indent(normalized);
    if (!quiet) out << csv;
    if (!rep.failure.empty()) {
      err << command << ": " << rep.failure << "\n";
      return 3;
    }
    return 0;
  } catch (const Error& e) {
    err << command << ": " << e.what() << "\n";
    return e.kind() == ErrorKind::ParseError || e.kind() == ErrorKind::ValidationError ? 2 : 3;
  } catch (const std::exception& e) {
    err << command << ": " << e.what() << "\n";
    return 3;
  }
}

}  // namespace pk::cli
