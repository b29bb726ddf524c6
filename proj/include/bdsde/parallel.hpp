#pragma once

#include <cstddef>
#include <functional>

namespace bdsde {

/// Runs fn(i) for i in [0, n) on up to `threads` threads with contiguous
/// static chunks. Callers write to disjoint slices; the first exception in
/// index order is rethrown after all workers finish.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace bdsde
