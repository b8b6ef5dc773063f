#pragma once

#include <cstddef>
#include <functional>

namespace lannlab {

/// Upper bound on worker threads used by parallel_for (default 1).
void set_max_threads(int threads);
int max_threads();

/// Calls fn(i) for every i in [0, count). Work is split into contiguous
/// blocks; callers write results into pre-sized slots so the outcome does
/// not depend on the thread count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace lannlab
