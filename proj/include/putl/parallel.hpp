#pragma once

#include <cstddef>
#include <functional>

namespace putl {

// Worker count: PUTL_THREADS if set and positive, else the hardware count.
int default_threads();

// Runs body(i) for i in [0, count) on up to `threads` workers. Each index is
// processed exactly once; callers write results into per-index slots so the
// outcome does not depend on scheduling. The first exception is rethrown
// after all workers finish.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

}  // namespace putl
