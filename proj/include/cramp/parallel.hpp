#pragma once

#include <cstddef>
#include <functional>

namespace cramp {

/// Worker count from CRAMP_THREADS, falling back to hardware concurrency.
int default_thread_count();

/// Resolves a requested count: <= 0 means default_thread_count().
int resolve_threads(int requested);

/// Runs body(i) for i in [0, count) on up to `threads` workers. Each index is
/// executed exactly once; callers write into index-ordered storage so results
/// do not depend on scheduling. The first exception thrown by any task is
/// rethrown on the calling thread after all workers stop.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace cramp
