#pragma once

#include <cstddef>
#include <functional>

namespace detkit {

/// Run fn(0..n-1) on up to `threads` workers. Indices are distributed in
/// contiguous chunks; fn must only touch its own index's state, which keeps
/// results identical for every thread count.
void parallel_for(size_t n, int threads, const std::function<void(size_t)>& fn);

int hardware_threads();

}  // namespace detkit
