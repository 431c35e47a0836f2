#pragma once

#include <cstddef>
#include <functional>

namespace krt {

// Worker count used by parallel_for. Defaults to the KRT_THREADS
// environment variable when set, otherwise 1.
[[nodiscard]] std::size_t thread_count();
void set_thread_count(std::size_t n);

// Calls body(i) for i in [0, n), statically chunked over thread_count()
// workers. Each index is visited exactly once; callers write results into
// per-index slots so output never depends on the schedule. The first
// exception thrown by any worker is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace krt
