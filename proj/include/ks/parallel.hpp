#pragma once

#include <cstddef>
#include <functional>

namespace ks {

/// Worker count: KS_THREADS if set (>= 1, at most 256), else hardware concurrency.
unsigned worker_count();

/// Runs body(i) for i in [0, count), split into contiguous blocks over
/// worker_count() threads. Bodies must only write to their own slot.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace ks
