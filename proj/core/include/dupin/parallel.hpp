#pragma once

#include <cstddef>
#include <functional>

namespace dupin {

// Worker count: DUPIN_THREADS if set and positive, otherwise hardware concurrency.
int thread_count();

// Runs fn(i) for i in [0, n). Each index is written by exactly one worker, so results
// do not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace dupin
