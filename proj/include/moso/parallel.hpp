#pragma once

#include <functional>

namespace moso {

/// Runs fn(i) for every i in [0, count) on up to `jobs` threads.
/// Tasks must write only to disjoint slots; the first exception thrown by
/// any task is rethrown on the calling thread after all workers join.
/// jobs <= 1 runs inline.
void parallel_for(int count, int jobs, const std::function<void(int)>& fn);

}  // namespace moso
