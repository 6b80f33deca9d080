#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace pk {

template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vec = VectorX<double>;
using Mat = MatrixX<double>;

/// Failure categories surfaced by the library. The CLI maps them to exit codes.
enum class ErrorKind {
  Infeasible,
  Stalled,
  SingularSurface,
  DegenerateBody,
  EmptyFamily,
  HypothesisViolated,
  DegenerateTransversality,
  PrerequisiteViolated,
  BudgetExhausted,
  ParseError,
  ValidationError,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), detail_(what) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

/// Volume of the unit ball in R^n.
inline double unit_ball_volume(int n) {
  // omega_n = omega_{n-2} 2 pi / n with omega_0 = 1, omega_1 = 2
  double w = n % 2 ? 2.0 : 1.0;
  for (int k = 2 + n % 2; k <= n; k += 2) w *= 2.0 * std::numbers::pi / k;
  return w;
}

// ---------------------------------------------------------------------------
// Deterministic random streams.
//
// Every Monte Carlo loop is split into fixed-size blocks. Block b of stream s
// under seed k draws from an engine seeded by mix(k, s, b), so results depend
// only on (seed, stream, block) and never on how blocks are scheduled.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t block = 0) {
  return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ (block * 0x632be59bd9b4e019ULL));
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t block = 0) {
  return Engine(mix_seed(seed, stream, block));
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Engine& eng) { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }

inline double normal01(Engine& eng) {
  std::normal_distribution<double> dist;
  return dist(eng);
}

/// Uniform direction on S^{n-1}.
Vec random_unit_vector(int n, Engine& eng);

/// Samples per block in every Monte Carlo loop. Fixed so results are
/// independent of the worker count.
inline constexpr std::size_t kBlockSize = 4096;

/// Caps the worker count used by parallel_for. 0 means hardware concurrency.
void set_max_threads(unsigned threads);
unsigned max_threads();

/// Runs body(i) for i in [0, count) across workers. The body must only write
/// to slot i of caller-owned storage.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

// Stream tags keep independent consumers of one seed apart.
namespace stream {
inline constexpr std::uint64_t kVolume = 0x11;
inline constexpr std::uint64_t kSurfaceSlab = 0x12;
inline constexpr std::uint64_t kSurfaceLines = 0x13;
inline constexpr std::uint64_t kFiber = 0x14;
inline constexpr std::uint64_t kDirections = 0x15;
inline constexpr std::uint64_t kMollify = 0x16;
inline constexpr std::uint64_t kBisection = 0x17;
inline constexpr std::uint64_t kRestart = 0x18;
inline constexpr std::uint64_t kSearch = 0x19;
inline constexpr std::uint64_t kScene = 0x1a;
inline constexpr std::uint64_t kCover = 0x1b;
inline constexpr std::uint64_t kDeterminant = 0x1c;
inline constexpr std::uint64_t kTubePoints = 0x1d;
inline constexpr std::uint64_t kDisks = 0x99;
}  // namespace stream

}  // namespace pk
