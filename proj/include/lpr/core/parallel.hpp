#pragma once

#include <cstddef>
#include <functional>

namespace lpr {

/// Caps worker threads used by every parallel stage. 0 means hardware concurrency.
void set_num_threads(unsigned n);
unsigned num_threads();

/// Runs fn(i) for i in [0, n). Work is split into contiguous chunks, so any
/// per-index output written by fn is independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace lpr
