#pragma once

#include <functional>

namespace wuglab {

// Runs fn over disjoint contiguous chunks of [0, n). Workers never share
// output ranges, so results are bitwise identical for any thread count.
// Falls back to inline execution for small n or a single-thread pool.
void parallel_for(int n, const std::function<void(int, int)>& fn);

void set_worker_threads(int n);
int worker_threads();

} // namespace wuglab
