#pragma once

#include <cstddef>
#include <functional>

namespace fruitlet::app {

/// Runs fn(index, worker) for every index in [0, count) on up to `workers`
/// threads. Each worker id is used by one thread only, so per-worker state
/// indexed by it needs no locking. Exceptions escaping fn are rethrown after
/// all workers stop.
void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t, unsigned)>& fn);

unsigned default_worker_count();

}  // namespace fruitlet::app
