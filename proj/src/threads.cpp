#include "relnet/threads.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace relnet {

int worker_count() {
  int n = 0;
  if (const char* env = std::getenv("RELNET_THREADS")) {
    n = std::atoi(env);
    if (n < 0) n = 0;
  }
  if (n == 0) n = static_cast<int>(std::thread::hardware_concurrency());
  return n > 0 ? n : 1;
}

namespace {
thread_local bool inside_parallel_section = false;
}

void parallel_for(int64_t n, const std::function<void(int64_t)>& fn) {
  const int workers = static_cast<int>(std::min<int64_t>(worker_count(), n));
  if (workers <= 1 || inside_parallel_section) {
    for (int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int64_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      inside_parallel_section = true;
      for (int64_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace relnet
