#pragma once

#include <cstdint>
#include <functional>

namespace relnet {

// Worker count for parallel sections: the RELNET_THREADS environment variable
// caps parallelism, 0 or unset means hardware concurrency.
int worker_count();

// Runs fn(i) for i in [0, n). Work is chunked by index; callers must write
// results into pre-sized slots so the merge is deterministic regardless of
// the thread count.
void parallel_for(int64_t n, const std::function<void(int64_t)>& fn);

}  // namespace relnet
