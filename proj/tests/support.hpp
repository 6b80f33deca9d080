#pragma once

#include "pk/common.hpp"

#include <initializer_list>

namespace pk::test {

inline Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// Composite Simpson rule.
template <class F>
double simpson(F f, double a, double b, int m = 2000) {
  const double h = (b - a) / m;
  double s = f(a) + f(b);
  for (int i = 1; i < m; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Area of {v in [-1,1]^2 : inside(v)} by midpoint counting on a fine grid.
template <class F>
double grid_area(F inside, int m = 2000) {
  const double h = 2.0 / m;
  long long hits = 0;
  Vec v(2);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      v << -1.0 + (i + 0.5) * h, -1.0 + (j + 0.5) * h;
      hits += inside(v);
    }
  return static_cast<double>(hits) * h * h;
}

}  // namespace pk::test
