#pragma once

// Degree-d polynomials whose zero set bisects several regions at once.

#include "pk/measure.hpp"

namespace pk {

struct BisectionProblem {
  std::vector<Region> sets;
  int degree = 1;
  double tolerance = 0.01;  // bound on |F_i(P)| / vol(U_i)
};

struct BisectionResult {
  Poly P;        // unit coefficient vector in the problem's chart
  Vec defects;   // F_i(P) / vol(U_i)
  Vec volumes;   // estimated vol(U_i)
  int iterations = 0;
  int restart = -1;  // restart that produced P
  bool success = false;  // false: Stalled, P and defects are the best found
};

struct BisectionOptions {
  int restarts = 16;
  int wave = 1;            // restarts evaluated together; the first wave with a success ends the search
  int max_iterations = 80;
};

/// Chart centred on the union of the sets' bounding boxes.
Chart<double> problem_chart(const std::vector<Region>& sets);

/// Minimizes sum_i (F_i(P) / vol U_i)^2 over the unit coefficient sphere by
/// Gauss-Newton on a tanh-smoothed sign with an annealed temperature. All
/// restarts share one set of sample points, so the objective is
/// deterministic. Throws Infeasible when r > C(n+d, d) - 1 and
/// ValidationError for a set of negligible volume.
BisectionResult solve_bisection(const BisectionProblem& problem, const SampleBudget& budget,
                                const BisectionOptions& options = {});

/// count balls with centres uniform in [0, side]^n, radii in [0.5, 1.5]
/// and pairwise gaps of at least 0.1, by rejection.
std::vector<Region> random_disjoint_balls(int n, int count, double side, std::uint64_t seed);

/// |F(P)| <= tau vol(U) under the given budget.
bool bisects(const Surface& P, const Region& U, double tau, const SampleBudget& budget);

}  // namespace pk
