#pragma once

// Static-partition parallel loop. Each index is handled by exactly one worker
// and results are written per index, so output never depends on the worker count.

#include <cstddef>
#include <functional>

namespace bohmlab {

/// 0 restores the default (hardware concurrency).
void set_thread_count(std::size_t n);
std::size_t thread_count();

/// Calls fn(i) for i in [0, n). Exceptions are rethrown on the caller, lowest index first.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace bohmlab
