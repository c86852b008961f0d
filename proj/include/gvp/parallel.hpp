// Fork-join helper for loops whose iterations write disjoint outputs.
// Results must not depend on the thread count, so only such loops use it
// (Gram rows, matrix-vector rows). GVP_THREADS caps the pool; 0 or unset
// means hardware concurrency.
#pragma once

#include <cstddef>
#include <functional>

namespace gvp {

int thread_count();

// Splits [begin, end) into contiguous chunks and runs body(lo, hi) on each,
// possibly concurrently. body must only write state owned by its own range.
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t, std::size_t)>& body);

} // namespace gvp
