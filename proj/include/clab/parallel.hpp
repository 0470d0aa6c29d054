#pragma once

#include <cstddef>
#include <functional>

namespace clab {

// Worker cap used by parallel_for; 0 means hardware concurrency.
void set_threads(int n);
int thread_count();

// Runs fn(i) for i in [0, n). Each index is handled by exactly one worker, so
// callers that write only slot i get results independent of the thread count.
// The first exception thrown by any task is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace clab
