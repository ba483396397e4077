#pragma once

#include <cstddef>
#include <functional>

namespace mlmlm {

/// Worker count: MLMLM_THREADS when set, else hardware concurrency.
std::size_t thread_count();
void set_thread_count(std::size_t n);  // 0 restores the default

/// Runs body(i) for i in [0, n). Each index is handled by exactly one
/// worker and iterations must not share writable state, so results do not
/// depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace mlmlm
