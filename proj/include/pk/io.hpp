#pragma once

// Scene and polynomial files (JSON, version 1), normalization and hashing.

#include "pk/kakeya.hpp"
#include "pk/planiness.hpp"

#include <string_view>

namespace pk::io {

enum class Generator { Grid, RandomTransverse, Explicit };

struct GridSpec {
  int m = 1;
  double spacing = 1.0;
  double radius = 0.5;
};

struct RandomSpec {
  std::vector<int> counts;
  double theta_min = 0.2;
  double radius = 0.5;
};

/// Experiment parameters; unset fields fall back to per-command defaults.
struct Params {
  std::optional<int> degree;
  std::optional<int> d_cap;
  std::optional<double> tolerance;
  std::optional<std::size_t> samples;
  std::optional<std::size_t> fibers;
  std::optional<std::size_t> directions;
  std::optional<double> L;
  std::vector<double> sigma;
  std::optional<int> disks;
  std::vector<Region> regions;
  std::vector<VisibilityTarget> targets;
  std::optional<Surface> poly;
  std::vector<Vec> vectors;
  std::optional<MollifiedQuery> mollify;
};

struct SceneFile {
  int version = 1;
  int n = 2;
  std::optional<int> S;  // derived for grids
  std::uint64_t seed = 0;
  Generator generator = Generator::Explicit;
  GridSpec grid;
  RandomSpec random;
  std::vector<std::vector<Tube>> families;  // explicit generator
  Params params;
};

/// Throws ParseError naming the line of a syntax error or the offending field.
SceneFile parse_scene(std::string_view text, std::string_view origin = "scene");
SceneFile load_scene(const std::string& path);

/// Normalized text: sorted keys, two-space indentation, trailing newline.
std::string serialize_scene(const SceneFile& scene);

/// The tube scene the generator describes; validated.
TubeScene materialize(const SceneFile& scene);

/// Polynomial file {"version": 1, "n": .., "factors": [{"degree": .., "terms": [{"exp": [..], "c": ..}]}]}.
Surface parse_poly(std::string_view text, std::string_view origin = "poly");
Surface load_poly(const std::string& path);

std::uint64_t fnv1a(std::string_view bytes);
inline std::uint64_t scene_hash(const SceneFile& scene) { return fnv1a(serialize_scene(scene)); }
std::string hex(std::uint64_t value);

std::string read_file(const std::string& path);

}  // namespace pk::io
