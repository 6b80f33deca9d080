#include "pk/hamsandwich.hpp"

#include <Eigen/Cholesky>

#include <algorithm>

namespace pk {

namespace {

// Monomial values at the sample points of one set that fall inside it.
struct SetSamples {
  Mat phi;  // inside samples x basis size
  double volume = 0.0;
};

SetSamples collect(const Region& U, const MonomialTable& table, const Chart<double>& chart, const SampleBudget& budget) {
  const Box bb = bounding_box(U);
  const BoxSampler sampler(bb.lo, bb.hi, budget.count, budget.stratified);
  std::vector<Mat> parts(sampler.blocks());
  parallel_for(sampler.blocks(), [&](std::size_t b) {
    Mat pts;
    sampler.block(b, budget.seed, stream::kVolume, pts);
    std::vector<Eigen::Index> inside;
    for (Eigen::Index i = 0; i < pts.cols(); ++i)
      if (region_contains(U, pts.col(i))) inside.push_back(i);
    Mat& out = parts[b];
    out.resize(static_cast<Eigen::Index>(inside.size()), static_cast<Eigen::Index>(table.size()));
    for (std::size_t k = 0; k < inside.size(); ++k) {
      Vec y = pts.col(inside[k]);
      if (chart.center.size()) y -= chart.center;
      y /= chart.scale;
      out.row(static_cast<Eigen::Index>(k)) = monomial_values<double>(table, y).transpose();
    }
  });
  Eigen::Index rows = 0;
  for (const auto& p : parts) rows += p.rows();
  SetSamples s;
  s.phi.resize(rows, static_cast<Eigen::Index>(table.size()));
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    s.phi.middleRows(at, p.rows()) = p;
    at += p.rows();
  }
  s.volume = sampler.box_volume() * static_cast<double>(rows) / static_cast<double>(budget.count);
  return s;
}

double sign_defect(const Mat& phi, const Vec& c) {
  const Vec p = phi * c;
  long long net = 0;
  for (double v : p) net += (v > 0.0) - (v < 0.0);
  return static_cast<double>(net) / static_cast<double>(phi.rows());
}

struct Outcome {
  Vec c;
  Vec defects;
  int iterations = 0;
  double worst = kUnbounded;
};

Outcome descend(const std::vector<SetSamples>& sets, Vec c, double tau, int max_iterations) {
  const auto r = static_cast<Eigen::Index>(sets.size());
  const Eigen::Index N = c.size();
  auto true_defects = [&](const Vec& x) {
    Vec d(r);
    for (Eigen::Index i = 0; i < r; ++i) d[i] = sign_defect(sets[static_cast<std::size_t>(i)].phi, x);
    return d;
  };
  auto smoothed = [&](const Vec& x, double s, Mat* J) {
    Vec g(r);
    if (J) J->resize(r, N);
    for (Eigen::Index i = 0; i < r; ++i) {
      const Mat& phi = sets[static_cast<std::size_t>(i)].phi;
      const Vec t = ((phi * x) / s).array().tanh().matrix();
      g[i] = t.mean();
      if (J) J->row(i) = (phi.transpose() * (1.0 - t.array().square()).matrix()).transpose() / (s * static_cast<double>(phi.rows()));
    }
    return g;
  };
  auto rms = [&](const Vec& x) {
    double sum = 0.0;
    Eigen::Index m = 0;
    for (const auto& s : sets) {
      sum += (s.phi * x).squaredNorm();
      m += s.phi.rows();
    }
    return std::sqrt(sum / static_cast<double>(m));
  };

  Outcome out;
  out.c = c;
  out.defects = true_defects(c);
  out.worst = out.defects.cwiseAbs().maxCoeff();
  const double anneal = 0.6 * max_iterations;
  for (int it = 0; it < max_iterations && out.worst > tau; ++it) {
    const double temp = 0.3 * std::pow(0.01, std::min(1.0, it / anneal));
    const double s = temp * rms(c);
    Mat J;
    const Vec g = smoothed(c, s, &J);
    const Mat Jt = J - (J * c) * c.transpose();
    Mat G = Jt * Jt.transpose();
    G.diagonal().array() += 1e-10 * std::max(1e-300, G.trace());
    const Vec step = -Jt.transpose() * G.ldlt().solve(g);
    const double f0 = g.squaredNorm();
    double alpha = 1.0;
    Vec next = c;
    for (int k = 0; k < 6; ++k, alpha *= 0.5) {
      next = (c + alpha * step).normalized();
      if (smoothed(next, s, nullptr).squaredNorm() < f0) break;
    }
    c = next;
    const Vec d = true_defects(c);
    const double worst = d.cwiseAbs().maxCoeff();
    out.iterations = it + 1;
    if (worst < out.worst) {
      out.worst = worst;
      out.defects = d;
      out.c = c;
    }
  }
  return out;
}

}  // namespace

Chart<double> problem_chart(const std::vector<Region>& sets) {
  Box all = bounding_box(sets.front());
  for (const auto& U : sets) {
    const Box b = bounding_box(U);
    all.lo = all.lo.cwiseMin(b.lo);
    all.hi = all.hi.cwiseMax(b.hi);
  }
  Chart<double> chart;
  chart.center = 0.5 * (all.lo + all.hi);
  chart.scale = std::max(1e-12, 0.5 * (all.hi - all.lo).maxCoeff());
  return chart;
}

BisectionResult solve_bisection(const BisectionProblem& problem, const SampleBudget& budget, const BisectionOptions& options) {
  if (problem.sets.empty()) throw Error(ErrorKind::ValidationError, "no sets to bisect");
  if (problem.degree < 1) throw Error(ErrorKind::ValidationError, "degree must be at least 1");
  const int n = region_dim(problem.sets.front());
  const std::size_t r = problem.sets.size();
  const std::uint64_t N = binomial(n + problem.degree, problem.degree) - 1;
  if (r > N)
    throw Error(ErrorKind::Infeasible, std::to_string(r) + " sets exceed the " + std::to_string(N) +
                                           " a degree-" + std::to_string(problem.degree) + " surface can bisect");
  for (const auto& U : problem.sets)
    if (region_dim(U) != n) throw Error(ErrorKind::ValidationError, "sets of mixed dimension");

  const auto table = monomial_table(n, problem.degree);
  const Chart<double> chart = problem_chart(problem.sets);
  // negligible relative to the chart box: its defect would be pure noise
  const double floor = 1e-6 * std::pow(2.0 * chart.scale, n);
  std::vector<SetSamples> sets;
  for (std::size_t i = 0; i < r; ++i) {
    sets.push_back(collect(problem.sets[i], *table, chart, budget));
    if (sets.back().phi.rows() < 100 || !(sets.back().volume > floor))
      throw Error(ErrorKind::ValidationError, "set " + std::to_string(i) + " (" + describe(problem.sets[i]) +
                                                  ") has negligible volume");
  }

  const int restarts = std::max(1, options.restarts);
  const int wave = std::max(1, options.wave);
  Outcome best;
  int best_index = -1;
  for (int start = 0; start < restarts; start += wave) {
    const int count = std::min(wave, restarts - start);
    std::vector<Outcome> outcomes(static_cast<std::size_t>(count));
    parallel_for(static_cast<std::size_t>(count), [&](std::size_t k) {
      Engine eng = make_engine(budget.seed, stream::kRestart, static_cast<std::uint64_t>(start) + k);
      const Vec c0 = random_unit_vector(static_cast<int>(table->size()), eng);
      outcomes[k] = descend(sets, c0, problem.tolerance, options.max_iterations);
    });
    for (int k = 0; k < count; ++k) {
      if (outcomes[static_cast<std::size_t>(k)].worst < best.worst) {
        best = outcomes[static_cast<std::size_t>(k)];
        best_index = start + k;
      }
    }
    if (best.worst <= problem.tolerance) break;
  }

  BisectionResult out;
  out.P = Poly(n, problem.degree, best.c, chart);
  out.restart = best_index;
  out.iterations = best.iterations;
  out.defects.resize(static_cast<Eigen::Index>(r));
  out.volumes.resize(static_cast<Eigen::Index>(r));
  for (std::size_t i = 0; i < r; ++i) {
    out.volumes[static_cast<Eigen::Index>(i)] = sets[i].volume;
    out.defects[static_cast<Eigen::Index>(i)] = signed_measure_split(Surface(out.P), problem.sets[i], budget).value / sets[i].volume;
  }
  out.success = out.defects.cwiseAbs().maxCoeff() <= problem.tolerance;
  return out;
}

std::vector<Region> random_disjoint_balls(int n, int count, double side, std::uint64_t seed) {
  if (n < 1 || count < 0 || !(side > 0.0)) throw Error(ErrorKind::ValidationError, "bad random ball parameters");
  Engine eng = make_engine(seed, stream::kDisks);
  std::vector<Region> sets;
  for (int attempt = 0; static_cast<int>(sets.size()) < count; ++attempt) {
    if (attempt > 100000) throw Error(ErrorKind::BudgetExhausted, "cannot place " + std::to_string(count) + " disjoint balls");
    Vec c(n);
    for (auto& x : c) x = side * uniform01(eng);
    const double r = 0.5 + uniform01(eng);
    bool clear = true;
    for (const auto& s : sets) {
      const auto& b = std::get<Ball>(s);
      if ((b.center - c).norm() < b.radius + r + 0.1) clear = false;
    }
    if (clear) sets.push_back(Ball{c, r});
  }
  return sets;
}

bool bisects(const Surface& P, const Region& U, double tau, const SampleBudget& budget) {
  const double vol = estimate_volume(U, budget).value;
  if (!(vol > 0.0)) throw Error(ErrorKind::ValidationError, "region has no measurable volume");
  return std::abs(signed_measure_split(P, U, budget).value) <= tau * vol;
}

}  // namespace pk
