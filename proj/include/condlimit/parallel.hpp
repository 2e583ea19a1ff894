#pragma once

#include <cstddef>
#include <functional>

namespace condlimit {

/// Worker count: CONDLIMIT_THREADS when set to a positive integer, else all cores.
std::size_t worker_count();

/// Runs body(i) for i in [0, count) on up to worker_count() threads.
///
/// Indices are split into contiguous static chunks, so any result written to
/// slot i is independent of the number of workers. Exceptions thrown by a body
/// are rethrown on the calling thread (the one from the lowest chunk wins).
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace condlimit
