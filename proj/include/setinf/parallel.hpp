#pragma once

#include <cstddef>
#include <functional>

namespace setinf {

// Worker count used by library loops when the caller passes 0. Defaults to
// the number of logical cores.
void set_default_threads(int n);
int default_threads();

// Runs body(i) for i in [0, n) on up to `threads` workers. Indices are handed
// out dynamically; bodies write results by index, so the outcome does not
// depend on the thread count. Calls made from inside a worker run
// serially. The first exception (lowest index) is rethrown after all workers
// finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, int threads = 0);

}  // namespace setinf
