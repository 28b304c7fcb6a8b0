#pragma once

#include <cstddef>
#include <functional>

namespace miprobe {

/// Worker cap: MIPROBE_THREADS if set to a positive integer, else the
/// hardware concurrency (at least 1).
std::size_t thread_budget();

/// Runs fn(0..n-1) on up to `threads` workers. Every index runs even if one
/// throws; the exception from the lowest failing index is rethrown.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace miprobe
