#pragma once

#include <cstddef>
#include <functional>

namespace defkit {

/// Caps the worker pool used by parallel_for. 0 means hardware concurrency.
void set_thread_count(unsigned count);
unsigned thread_count();

/// Runs body(i) for i in [begin, end). Iterations must write disjoint
/// outputs; results never depend on the thread count.
void parallel_for(std::ptrdiff_t begin, std::ptrdiff_t end, const std::function<void(std::ptrdiff_t)>& body);

}  // namespace defkit
