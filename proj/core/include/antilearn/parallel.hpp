#ifndef ANTILEARN_PARALLEL_HPP
#define ANTILEARN_PARALLEL_HPP

#include <cstdlib>
#include <thread>
#include <vector>

namespace antilearn {

// Worker cap: ANTI_LEARN_WORKERS env var, else hardware concurrency.
inline int worker_count() {
  if (const char* env = std::getenv("ANTI_LEARN_WORKERS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs fn(i) for i in [0, n). Tasks must write to disjoint state; any
// reduction over per-index partial results happens at the call site in index
// order, so results do not depend on the worker count.
template <typename Fn>
void parallel_for(int n, Fn&& fn) {
  int workers = worker_count();
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  if (workers > n) workers = n;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&, t]() {
      for (int i = t; i < n; i += workers) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace antilearn

#endif
