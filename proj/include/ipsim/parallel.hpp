#pragma once

#include <cstddef>
#include <functional>

namespace ipsim {

// Worker count: `requested` if > 0, else IPSIM_THREADS if set, else hardware
// concurrency.
unsigned resolve_threads(unsigned requested = 0);

// Runs fn(i) for i in [0, n) on up to `threads` workers. Callers write results
// into pre-sized slots so output never depends on scheduling. The first
// exception thrown by any task is rethrown.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace ipsim
