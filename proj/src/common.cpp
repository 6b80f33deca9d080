#include "pk/common.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace pk {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::Stalled: return "Stalled";
    case ErrorKind::SingularSurface: return "SingularSurface";
    case ErrorKind::DegenerateBody: return "DegenerateBody";
    case ErrorKind::EmptyFamily: return "EmptyFamily";
    case ErrorKind::HypothesisViolated: return "HypothesisViolated";
    case ErrorKind::DegenerateTransversality: return "DegenerateTransversality";
    case ErrorKind::PrerequisiteViolated: return "PrerequisiteViolated";
    case ErrorKind::BudgetExhausted: return "BudgetExhausted";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
  }
  return "Unknown";
}

Vec random_unit_vector(int n, Engine& eng) {
  Vec v(n);
  double norm = 0.0;
  do {
    for (int i = 0; i < n; ++i) v[i] = normal01(eng);
    norm = v.norm();
  } while (norm < 1e-12);
  return v / norm;
}

namespace {
std::atomic<unsigned> g_max_threads{0};
thread_local bool t_in_parallel = false;  // nested loops run inline
}

void set_max_threads(unsigned threads) { g_max_threads = threads; }

unsigned max_threads() {
  unsigned cap = g_max_threads.load();
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  return cap == 0 ? hw : std::min(cap, hw);
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = t_in_parallel ? 1 : std::min<std::size_t>(max_threads(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    const bool was = t_in_parallel;
    t_in_parallel = true;
    struct Restore {
      bool value;
      ~Restore() { t_in_parallel = value; }
    } restore{was};
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count || failed.load()) return;
      try {
        body(i);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace pk
