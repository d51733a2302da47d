#pragma once

#include <cstddef>
#include <functional>

namespace sarrain {

/// Worker count: SARRAIN_WORKERS if set, else the value passed to
/// set_worker_count, else hardware concurrency.
std::size_t worker_count();
void set_worker_count(std::size_t n);

/// Runs body(i) for i in [0, n) on up to worker_count() threads. Callers
/// write into per-index slots; any reduction happens afterwards in index
/// order so results do not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace sarrain
