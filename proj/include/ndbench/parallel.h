#pragma once

#include <cstddef>
#include <functional>

namespace ndbench {

/// Worker count implied by a request; 0 or negative selects the hardware
/// concurrency (at least 1).
int resolve_threads(int requested);

/// Runs fn(begin, end) over [0, count) split into fixed-size chunks.
/// Chunk boundaries depend only on count and chunk_size, never on the worker
/// count, so any quantity derived per chunk is identical for every thread
/// count. fn must only write to disjoint, chunk-owned locations. The first
/// exception thrown by fn is rethrown on the calling thread.
void parallel_chunks(std::size_t count, std::size_t chunk_size, int threads,
                     const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace ndbench
