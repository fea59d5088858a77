#pragma once

#include <cstddef>
#include <functional>

namespace biasbench {

// Runs fn(i) for i in [0, n) on up to `jobs` worker threads. Tasks must be
// independent; callers that aggregate results should write into preallocated
// per-index slots and reduce sequentially afterwards so that floating-point
// reduction order never depends on scheduling. jobs == 0 means one thread
// per hardware processor. Exceptions from tasks are captured and the first
// one (lowest index) is rethrown after all workers finish.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

std::size_t default_jobs();

}  // namespace biasbench
