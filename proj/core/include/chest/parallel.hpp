#pragma once

#include <cstddef>
#include <functional>

namespace chest {

/// Worker count: CHEST_THREADS if set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
int worker_count();

/// Runs body(i) for i in [0, n) on up to worker_count() threads. Work is
/// handed out by index, so callers that write results into slot i get output
/// independent of scheduling. The first exception thrown by any body is
/// rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace chest
