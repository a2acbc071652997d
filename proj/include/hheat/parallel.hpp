#pragma once

#include <cstddef>
#include <functional>

namespace hheat {

// Global worker bound; 0 means hardware concurrency.
void set_workers(int w);
int workers();

// Splits [0, count) into contiguous blocks, one per worker. Each index is
// visited exactly once; results must not depend on the partition.
void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& block);

}  // namespace hheat
