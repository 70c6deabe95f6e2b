#pragma once

#include <cstddef>
#include <functional>

namespace npspec {

/// Worker count from NPSPEC_THREADS, else hardware concurrency (at least 1).
std::size_t thread_count();

/// Runs body(i) for i in [0, n) over thread_count() workers. Each index is
/// processed exactly once; callers write results into per-index slots so the
/// outcome does not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace npspec
