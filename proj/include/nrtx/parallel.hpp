#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace nrtx {

// Process-wide worker count; set once from the CLI --threads flag.
int worker_count();
void set_worker_count(int n);

// Static chunking: index range [begin, end) is split into one contiguous
// chunk per worker, so the (index -> worker) assignment is a pure function
// of (range, workers). Deterministic reductions rely on this.
void parallel_for(int64_t begin, int64_t end,
                  const std::function<void(int64_t index, int worker)>& body);

// Chunked variant: each worker receives its [chunk_begin, chunk_end) once.
void parallel_chunks(int64_t begin, int64_t end,
                     const std::function<void(int64_t chunk_begin, int64_t chunk_end,
                                              int worker)>& body);

}  // namespace nrtx
