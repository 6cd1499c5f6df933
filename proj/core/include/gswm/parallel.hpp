#pragma once

#include <cstddef>
#include <functional>

namespace gswm {

/// Worker count used by parallel_for. Defaults to GSWM_THREADS when set,
/// otherwise the hardware concurrency.
int thread_count();

/// Overrides the worker count for the current process; 0 restores the default.
void set_thread_count(int n);

/// Runs body(i) for i in [0, n). Work items must write disjoint outputs;
/// any reduction is the caller's job and must happen in index order.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace gswm
