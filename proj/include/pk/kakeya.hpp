#pragma once

// Tube scenes, the multilinear Kakeya functional on the unit lattice, the
// near-axis intersection volume and its five-stage proof trace, and the
// visibility bound against products of per-family directed volumes.

#include "pk/hamsandwich.hpp"
#include "pk/visibility.hpp"

namespace pk {

/// n tube families inside the scene cube [0, S]^n.
struct TubeScene {
  int n = 2;
  int S = 1;
  std::uint64_t seed = 0;
  std::vector<std::vector<Tube>> families;

  Cube cube() const { return Cube{Eigen::VectorXi::Zero(n), static_cast<double>(S)}; }
  std::vector<int> counts() const;
};

/// Dimensions, family count and directions; throws ValidationError.
void validate(const TubeScene& scene);

/// Every tube clipped to the scene cube; tubes missing it are dropped.
std::vector<std::vector<Tube>> clipped_families(const TubeScene& scene);

/// m^{n-1} axis tubes per family with cores on the lattice spacing (i + 1/2).
/// spacing 1, radius 1/2 tiles the scene exactly (multilinear grid); spacing 2,
/// radius 1 gives adjacent disjoint strips (near-axis volume grid).
TubeScene lattice_scene(int n, int m, double spacing, double radius);

/// counts[j] tubes in family j with cores uniform in the scene and
/// directions tilted from e_j so that min |det| >= theta_min.
TubeScene random_transverse_scene(int n, const std::vector<int>& counts, double theta_min, int S, std::uint64_t seed,
                                  double radius = 0.5);

struct CubeTable {
  CubeLattice lattice{Eigen::VectorXi::Zero(1), 1};
  Eigen::MatrixXi M;         // cubes x n
  std::vector<long long> F;  // product over families
  std::vector<std::vector<std::vector<int>>> tubes;  // [cube][family] -> tube indices

  std::size_t size() const { return F.size(); }
};

CubeTable multiplicity_table(const TubeScene& scene, Contact contact = Contact::Interior);

/// sum_k F(Q_k)^{1/(n-1)}.
double kakeya_lhs(const CubeTable& table, int n);

struct KakeyaRatio {
  double lhs = 0.0;
  double theta = 0.0;
  bool theta_exhaustive = true;
  double rhs_core = 0.0;  // theta^{-1/(n-1)} prod_j A(j)^{1/(n-1)}
  double ratio = 0.0;
  std::vector<int> A;
};

/// Throws DegenerateTransversality when theta = 0.
KakeyaRatio kakeya_ratio(const TubeScene& scene);

/// Monte Carlo volume of the intersection over families of the union of
/// the family's tubes, inside the scene cube. Throws HypothesisViolated when
/// a direction is not within 1/(100n) of its axis.
VolumeEstimate theorem1_volume(const TubeScene& scene, const SampleBudget& budget);

struct TraceOptions {
  int d_cap = 0;  // 0: no cap on the bisection degree
  double tolerance = 0.01;
  std::size_t bisect_samples = 1 << 12;  // per cube
  std::size_t fibers = 1 << 12;
  std::optional<MollifiedQuery> mollify = MollifiedQuery{1e-3, 8};
};

struct TraceCube {
  std::size_t cube = 0;
  int family = 0;   // axis j chosen for the cube
  int tube = 0;     // index of the chosen tube in that family
  double beta = 0.0;  // directed volume of Z inside the cube along the chosen tube
  double area = 0.0;  // area of Z inside the cube
};

struct Theorem1Trace {
  // stage 1
  std::vector<std::size_t> cubes;
  std::size_t V = 0;
  int A = 0;
  // stage 2
  int degree = 0;
  double degree_ratio = 0.0;  // d / V^{1/n}
  BisectionResult bisection;
  // stage 3
  std::vector<TraceCube> rows;
  double beta_min = 0.0;
  // stage 4
  int best_family = 0;
  int best_tube = 0;
  std::size_t best_count = 0;
  double pigeonhole = 0.0;  // V / (n A)
  // stage 5
  double sum_best = 0.0;         // sum of beta over the best tube's cubes
  double enlarged = 0.0;         // directed volume inside the enlarged tube
  double enlarged_error = 0.0;
  double cylinder = 0.0;         // omega_{n-1} (1 + sqrt n)^{n-1} d
  double lhs = 0.0;              // V / A
  double c = 0.0;                // n omega (1 + sqrt n)^{n-1} (d / V^{1/n}) / beta_min
  double rhs = 0.0;              // c V^{1/n}
  bool chain_holds = false;      // every measured step of the chain
  bool holds = false;            // lhs <= rhs
};

/// Runs the five stages of the near-axis volume argument; an error from a stage
/// is rethrown with its kind and a "stage <name>:" prefix.
Theorem1Trace theorem1_trace(const TubeScene& scene, const SampleBudget& budget, const TraceOptions& options = {});

/// Coordinate hyperplanes x_j = k + 1/2 through every scene cube.
Arrangement coordinate_planes(const TubeScene& scene);

/// Two sets of unit-spaced planes per axis at k + 1/4 and k + 3/4, so every
/// unit cube sees V(v) >= 2 |v|_1 >= |v|.
Arrangement augmentation_planes(const TubeScene& scene);

/// Families through a shared region with family directions at determinant
/// theta: d_1 = e_1, ..., and the last direction tilted towards e_1.
TubeScene lemma61_scene(int n, double theta, std::uint64_t seed);

struct Lemma61Row {
  std::size_t cube = 0;
  double vis = 0.0;
  double product = 0.0;  // theta^{-1} prod_j V(v_{j,k})
  double ratio = 0.0;
  double det = 0.0;          // |det(v')| with v' = v / V(v)
  double hull_volume = 0.0;  // volume of conv(+-v') by polygon or tetrahedra
  double identity_error = 0.0;  // |hull - 2^n/n! |det|| / hull
};

struct Lemma61Report {
  double theta = 0.0;
  double bound = 0.0;  // n!/2^n
  double max_ratio = 0.0;
  std::vector<Lemma61Row> rows;
};

struct Lemma61Options {
  bool augment = true;
  std::size_t directions = 256;
};

/// For each cube met by every family: v_{j,k} minimizes V over the family's
/// tubes through the cube (lowest index on ties), then vis is compared with
/// theta^{-1} prod_j V(v_{j,k}). Throws PrerequisiteViolated when some unit
/// direction has V < 1 on an active cube.
Lemma61Report lemma61_check(const TubeScene& scene, const Arrangement& Z, const SampleBudget& budget,
                            const Lemma61Options& options = {});

}  // namespace pk
