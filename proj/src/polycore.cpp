#include "pk/polycore.hpp"

#include <mutex>

namespace pk {

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return r;
}

namespace {

void compositions(int remaining, int slot, MultiIndex& cur, std::vector<MultiIndex>& out) {
  const int n = static_cast<int>(cur.size());
  if (slot == n - 1) {
    cur[static_cast<std::size_t>(slot)] = remaining;
    out.push_back(cur);
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    cur[static_cast<std::size_t>(slot)] = e;
    compositions(remaining - e, slot + 1, cur, out);
  }
}

}  // namespace

std::vector<MultiIndex> monomial_basis(int n, int d) {
  if (n < 1 || d < 0) throw Error(ErrorKind::ValidationError, "monomial basis needs n >= 1 and d >= 0");
  std::vector<MultiIndex> out;
  out.reserve(binomial(n + d, d));
  MultiIndex cur(static_cast<std::size_t>(n), 0);
  for (int deg = 0; deg <= d; ++deg) compositions(deg, 0, cur, out);
  return out;
}

int stone_tukey_degree(int n, std::size_t r) {
  if (n < 1 || r < 1) throw Error(ErrorKind::ValidationError, "stone_tukey_degree needs n >= 1 and r >= 1");
  int d = 0;
  while (binomial(n + d, d) - 1 < r) ++d;
  return d;
}

std::shared_ptr<const MonomialTable> monomial_table(int n, int d) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const MonomialTable>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{n, d}];
  if (!slot) {
    auto table = std::make_shared<MonomialTable>();
    table->n = n;
    table->d = d;
    const auto basis = monomial_basis(n, d);
    table->exponents.resize(static_cast<Eigen::Index>(basis.size()), n);
    for (std::size_t m = 0; m < basis.size(); ++m) {
      for (int i = 0; i < n; ++i) table->exponents(static_cast<Eigen::Index>(m), i) = basis[m][static_cast<std::size_t>(i)];
      table->position.emplace(basis[m], m);
    }
    slot = std::move(table);
  }
  return slot;
}

}  // namespace pk
