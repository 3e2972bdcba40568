#pragma once

#include <cstddef>
#include <functional>

namespace d3d {

// Worker count used by data-parallel kernels. Defaults to $D3D_THREADS, or the
// machine's hardware concurrency when unset. Results never depend on it.
std::size_t num_threads();
void set_num_threads(std::size_t n);

// Calls fn(i) for every i in [0, count), split into contiguous chunks.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace d3d
