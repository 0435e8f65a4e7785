#include "nrtx/parallel.hpp"

#include <algorithm>

namespace nrtx {

static std::atomic<int> g_workers{0};

int worker_count() {
  auto n = g_workers.load();
  if (n > 0) return n;
  auto hw = static_cast<int>(std::thread::hardware_concurrency());
  return hw > 0 ? hw : 1;
}

void set_worker_count(int n) { g_workers.store(std::max(n, 1)); }

void parallel_chunks(int64_t begin, int64_t end,
                     const std::function<void(int64_t, int64_t, int)>& body) {
  auto count = end - begin;
  if (count <= 0) return;
  auto workers = std::min<int64_t>(worker_count(), count);
  if (workers <= 1) {
    body(begin, end, 0);
    return;
  }
  auto chunk = (count + workers - 1) / workers;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (int w = 0; w < workers; w++) {
    auto lo = begin + w * chunk;
    auto hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    threads.emplace_back([&body, lo, hi, w] { body(lo, hi, w); });
  }
  for (auto& t : threads) t.join();
}

void parallel_for(int64_t begin, int64_t end,
                  const std::function<void(int64_t, int)>& body) {
  parallel_chunks(begin, end, [&body](int64_t lo, int64_t hi, int w) {
    for (auto i = lo; i < hi; i++) body(i, w);
  });
}

}  // namespace nrtx
