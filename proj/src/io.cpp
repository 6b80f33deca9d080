#include "pk/io.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>

namespace pk::io {

using json = nlohmann::json;

namespace {

[[noreturn]] void parse_fail(std::string_view origin, const std::string& what) {
  throw Error(ErrorKind::ParseError, std::string(origin) + ": " + what);
}

// Field access with the JSON path in every message.
class Reader {
 public:
  Reader(const json& j, std::string path, std::string_view origin) : j_(j), path_(std::move(path)), origin_(origin) {}

  bool has(const char* key) const { return j_.is_object() && j_.contains(key) && !j_.at(key).is_null(); }

  Reader at(const char* key) const {
    if (!j_.is_object()) fail("expected an object");
    if (!has(key)) parse_fail(origin_, "missing field \"" + join(key) + "\"");
    return Reader(j_.at(key), join(key), origin_);
  }

  Reader at(std::size_t i) const { return Reader(j_.at(i), path_ + "[" + std::to_string(i) + "]", origin_); }

  std::size_t size() const {
    if (!j_.is_array()) fail("expected an array");
    return j_.size();
  }

  double number() const {
    if (!j_.is_number()) fail("expected a number");
    return j_.get<double>();
  }

  long long integer() const {
    if (!j_.is_number_integer()) fail("expected an integer");
    return j_.get<long long>();
  }

  std::uint64_t unsigned_integer() const {
    if (j_.is_number_unsigned()) return j_.get<std::uint64_t>();
    const long long v = integer();
    if (v < 0) fail("expected a non-negative integer");
    return static_cast<std::uint64_t>(v);
  }

  std::string string() const {
    if (!j_.is_string()) fail("expected a string");
    return j_.get<std::string>();
  }

  Vec vector(int n = -1) const {
    Vec v(static_cast<Eigen::Index>(size()));
    for (std::size_t i = 0; i < size(); ++i) v[static_cast<Eigen::Index>(i)] = at(i).number();
    if (n >= 0 && v.size() != n) fail("expected " + std::to_string(n) + " coordinates");
    return v;
  }

  std::vector<double> numbers() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i).number());
    return out;
  }

  [[noreturn]] void fail(const std::string& what) const { parse_fail(origin_, "field \"" + path_ + "\": " + what); }

 private:
  std::string join(const char* key) const { return path_.empty() ? std::string(key) : path_ + "." + key; }

  const json& j_;
  std::string path_;
  std::string_view origin_;
};

json parse_json(std::string_view text, std::string_view origin) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const std::size_t at = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(at ? at - 1 : 0), '\n');
    parse_fail(origin, "line " + std::to_string(line) + ": malformed JSON");
  }
}

Tube read_tube(const Reader& r, int n, int family) {
  const Vec p = r.at("point").vector(n);
  Vec d = r.at("direction").vector(n);
  if (!(d.norm() > 0.0)) r.at("direction").fail("direction must be non-zero");
  // already-unit directions are kept so that normalized files re-parse to the same bits
  if (std::abs(d.norm() - 1.0) > 1e-14) d.normalize();
  const double radius = r.has("radius") ? r.at("radius").number() : 1.0;
  const double length = r.has("length") ? r.at("length").number() : kUnbounded;
  return make_tube(p, d, radius, length, family);
}

json write_vec(const Vec& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json write_tube(const Tube& t) {
  json j{{"point", write_vec(t.core_point)}, {"direction", write_vec(t.direction)}, {"radius", t.radius}};
  if (t.bounded()) j["length"] = t.length;
  return j;
}

Region read_region(const Reader& r, int n) {
  if (r.has("ball")) {
    const Reader b = r.at("ball");
    return Ball{b.at("center").vector(n), b.at("radius").number()};
  }
  if (r.has("box")) {
    const Reader b = r.at("box");
    return Box{b.at("lo").vector(n), b.at("hi").vector(n)};
  }
  if (r.has("tube")) return read_tube(r.at("tube"), n, 0);
  r.fail("expected one of ball, box or tube");
}

json write_region(const Region& region) {
  if (const auto* b = std::get_if<Ball>(&region)) return {{"ball", {{"center", write_vec(b->center)}, {"radius", b->radius}}}};
  if (const auto* b = std::get_if<Box>(&region)) return {{"box", {{"lo", write_vec(b->lo)}, {"hi", write_vec(b->hi)}}}};
  return {{"tube", write_tube(std::get<Tube>(region))}};
}

Surface read_surface(const Reader& r, int n) {
  std::vector<Poly> factors;
  const Reader fs = r.at("factors");
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const Reader f = fs.at(i);
    const auto d = f.at("degree").integer();
    if (d < 0 || d > 64) f.at("degree").fail("degree out of range");
    Chart<double> chart;
    if (f.has("chart")) {
      chart.center = f.at("chart").at("center").vector(n);
      chart.scale = f.at("chart").at("scale").number();
    }
    std::vector<std::pair<MultiIndex, double>> terms;
    const Reader ts = f.at("terms");
    for (std::size_t k = 0; k < ts.size(); ++k) {
      const Reader e = ts.at(k).at("exp");
      MultiIndex alpha;
      for (std::size_t m = 0; m < e.size(); ++m) alpha.push_back(static_cast<int>(e.at(m).integer()));
      if (static_cast<int>(alpha.size()) != n) e.fail("expected " + std::to_string(n) + " exponents");
      terms.emplace_back(alpha, ts.at(k).at("c").number());
    }
    try {
      factors.push_back(Poly::from_terms(n, static_cast<int>(d), terms, chart));
    } catch (const Error& err) {
      f.fail(err.detail());
    }
  }
  return Surface(std::move(factors));
}

json write_surface(const Surface& Z, int n) {
  json factors = json::array();
  for (const auto& f : Z.factors()) {
    json terms = json::array();
    const auto& e = f.basis().exponents;
    for (Eigen::Index m = 0; m < f.coeffs().size(); ++m) {
      if (f.coeffs()[m] == 0.0) continue;
      std::vector<int> alpha(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) alpha[static_cast<std::size_t>(i)] = e(m, i);
      terms.push_back({{"exp", alpha}, {"c", f.coeffs()[m]}});
    }
    json jf{{"degree", f.degree()}, {"terms", terms}};
    if (f.chart().center.size() || f.chart().scale != 1.0) {
      jf["chart"] = {{"center", f.chart().center.size() ? write_vec(f.chart().center) : write_vec(Vec::Zero(n))},
                     {"scale", f.chart().scale}};
    }
    factors.push_back(jf);
  }
  return {{"factors", factors}};
}

Params read_params(const Reader& r, int n) {
  Params p;
  auto opt_int = [&](const char* k, std::optional<int>& out) {
    if (r.has(k)) out = static_cast<int>(r.at(k).integer());
  };
  auto opt_size = [&](const char* k, std::optional<std::size_t>& out) {
    if (r.has(k)) out = static_cast<std::size_t>(r.at(k).unsigned_integer());
  };
  auto opt_num = [&](const char* k, std::optional<double>& out) {
    if (r.has(k)) out = r.at(k).number();
  };
  opt_int("degree", p.degree);
  opt_int("d_cap", p.d_cap);
  opt_num("tolerance", p.tolerance);
  opt_size("samples", p.samples);
  opt_size("fibers", p.fibers);
  opt_size("directions", p.directions);
  opt_num("L", p.L);
  opt_int("disks", p.disks);
  if (r.has("sigma")) p.sigma = r.at("sigma").numbers();
  if (r.has("regions"))
    for (std::size_t i = 0; i < r.at("regions").size(); ++i) p.regions.push_back(read_region(r.at("regions").at(i), n));
  if (r.has("targets")) {
    const Reader ts = r.at("targets");
    for (std::size_t i = 0; i < ts.size(); ++i)
      p.targets.push_back({read_region(ts.at(i).at("region"), n), ts.at(i).at("M").number()});
  }
  if (r.has("poly")) p.poly = read_surface(r.at("poly"), n);
  if (r.has("vectors"))
    for (std::size_t i = 0; i < r.at("vectors").size(); ++i) p.vectors.push_back(r.at("vectors").at(i).vector(n));
  if (r.has("mollify")) {
    const Reader m = r.at("mollify");
    p.mollify = MollifiedQuery{m.at("epsilon").number(), static_cast<int>(m.at("k").integer())};
  }
  return p;
}

json write_params(const Params& p, int n) {
  json j = json::object();
  if (p.degree) j["degree"] = *p.degree;
  if (p.d_cap) j["d_cap"] = *p.d_cap;
  if (p.tolerance) j["tolerance"] = *p.tolerance;
  if (p.samples) j["samples"] = *p.samples;
  if (p.fibers) j["fibers"] = *p.fibers;
  if (p.directions) j["directions"] = *p.directions;
  if (p.L) j["L"] = *p.L;
  if (p.disks) j["disks"] = *p.disks;
  if (!p.sigma.empty()) j["sigma"] = p.sigma;
  if (!p.regions.empty()) {
    j["regions"] = json::array();
    for (const auto& r : p.regions) j["regions"].push_back(write_region(r));
  }
  if (!p.targets.empty()) {
    j["targets"] = json::array();
    for (const auto& t : p.targets) j["targets"].push_back({{"region", write_region(t.region)}, {"M", t.M}});
  }
  if (p.poly) j["poly"] = write_surface(*p.poly, n);
  if (!p.vectors.empty()) {
    j["vectors"] = json::array();
    for (const auto& v : p.vectors) j["vectors"].push_back(write_vec(v));
  }
  if (p.mollify) j["mollify"] = {{"epsilon", p.mollify->epsilon}, {"k", p.mollify->k}};
  return j;
}

}  // namespace

SceneFile parse_scene(std::string_view text, std::string_view origin) {
  const json j = parse_json(text, origin);
  const Reader r(j, "", origin);
  SceneFile s;
  s.version = static_cast<int>(r.at("version").integer());
  if (s.version != 1) r.at("version").fail("unsupported version " + std::to_string(s.version));
  s.n = static_cast<int>(r.at("n").integer());
  if (s.n < 2 || s.n > 8) r.at("n").fail("n must be between 2 and 8");
  if (r.has("S")) {
    s.S = static_cast<int>(r.at("S").integer());
    if (*s.S < 1) r.at("S").fail("S must be positive");
  }
  if (r.has("seed")) s.seed = r.at("seed").unsigned_integer();
  const Reader g = r.at("generator");
  const std::string kind = g.at("kind").string();
  if (kind == "grid") {
    s.generator = Generator::Grid;
    s.grid.m = static_cast<int>(g.at("m").integer());
    if (g.has("spacing")) s.grid.spacing = g.at("spacing").number();
    if (g.has("radius")) s.grid.radius = g.at("radius").number();
  } else if (kind == "random_transverse") {
    s.generator = Generator::RandomTransverse;
    const Reader c = g.at("counts");
    for (std::size_t i = 0; i < c.size(); ++i) s.random.counts.push_back(static_cast<int>(c.at(i).integer()));
    if (g.has("theta_min")) s.random.theta_min = g.at("theta_min").number();
    if (g.has("radius")) s.random.radius = g.at("radius").number();
    if (!s.S) r.at("S");
  } else if (kind == "explicit") {
    s.generator = Generator::Explicit;
    const Reader fams = g.at("families");
    for (std::size_t f = 0; f < fams.size(); ++f) {
      s.families.emplace_back();
      for (std::size_t t = 0; t < fams.at(f).size(); ++t)
        try {
          s.families.back().push_back(read_tube(fams.at(f).at(t), s.n, static_cast<int>(f)));
        } catch (const Error& e) {
          if (e.kind() == ErrorKind::ParseError) throw;
          fams.at(f).at(t).fail(e.detail());
        }
    }
    if (!s.S) r.at("S");
  } else {
    g.at("kind").fail("unknown generator \"" + kind + "\"");
  }
  if (r.has("params")) {
    try {
      s.params = read_params(r.at("params"), s.n);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::ParseError) throw;
      parse_fail(origin, "field \"params\": " + e.detail());
    }
  }
  return s;
}

SceneFile load_scene(const std::string& path) { return parse_scene(read_file(path), path); }

std::string serialize_scene(const SceneFile& s) {
  json j{{"version", s.version}, {"n", s.n}, {"seed", s.seed}};
  if (s.S) j["S"] = *s.S;
  switch (s.generator) {
    case Generator::Grid:
      j["generator"] = {{"kind", "grid"}, {"m", s.grid.m}, {"spacing", s.grid.spacing}, {"radius", s.grid.radius}};
      break;
    case Generator::RandomTransverse:
      j["generator"] = {{"kind", "random_transverse"}, {"counts", s.random.counts}, {"theta_min", s.random.theta_min},
                        {"radius", s.random.radius}};
      break;
    case Generator::Explicit: {
      json fams = json::array();
      for (const auto& f : s.families) {
        json jf = json::array();
        for (const auto& t : f) jf.push_back(write_tube(t));
        fams.push_back(jf);
      }
      j["generator"] = {{"kind", "explicit"}, {"families", fams}};
      break;
    }
  }
  const json params = write_params(s.params, s.n);
  if (!params.empty()) j["params"] = params;
  return j.dump(2) + "\n";
}

TubeScene materialize(const SceneFile& s) {
  TubeScene scene;
  switch (s.generator) {
    case Generator::Grid:
      scene = lattice_scene(s.n, s.grid.m, s.grid.spacing, s.grid.radius);
      if (s.S && *s.S != scene.S)
        throw Error(ErrorKind::ValidationError, "S = " + std::to_string(*s.S) + " does not match the grid side " +
                                                    std::to_string(scene.S));
      break;
    case Generator::RandomTransverse:
      if (static_cast<int>(s.random.counts.size()) != s.n)
        throw Error(ErrorKind::ValidationError, "random_transverse needs one count per family");
      scene = random_transverse_scene(s.n, s.random.counts, s.random.theta_min, *s.S, s.seed, s.random.radius);
      break;
    case Generator::Explicit:
      scene.n = s.n;
      scene.S = *s.S;
      scene.families = s.families;
      break;
  }
  scene.seed = s.seed;
  validate(scene);
  return scene;
}

Surface parse_poly(std::string_view text, std::string_view origin) {
  const json j = parse_json(text, origin);
  const Reader r(j, "", origin);
  if (r.at("version").integer() != 1) r.at("version").fail("unsupported version");
  const auto n = r.at("n").integer();
  if (n < 1 || n > 8) r.at("n").fail("n must be between 1 and 8");
  return read_surface(r, static_cast<int>(n));
}

Surface load_poly(const std::string& path) { return parse_poly(read_file(path), path); }

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ParseError, path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace pk::io
