#pragma once

#include <cstddef>
#include <functional>

namespace filmetric {

/// Thread count from FILMETRIC_THREADS, else hardware concurrency (min 1).
int default_thread_count();

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Work is pulled from
/// a shared counter, so fn must write only to slot i of any shared output.
/// The first exception thrown by any worker is rethrown on the caller.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace filmetric
