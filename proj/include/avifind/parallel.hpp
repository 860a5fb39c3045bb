#pragma once

#include <cstddef>
#include <functional>

namespace avifind {

// Resolves a --jobs request: positive values pass through, 0 falls back to
// the AVIFIND_JOBS environment variable, then to hardware concurrency.
int resolve_jobs(int requested);

// Runs fn(0..count-1) on up to `jobs` worker threads. Callers index into
// preallocated output slots, so results are schedule-independent. The
// lowest-index exception, if any, is rethrown.
void parallel_for(std::size_t count, int jobs,
                  const std::function<void(std::size_t)>& fn);

}  // namespace avifind
