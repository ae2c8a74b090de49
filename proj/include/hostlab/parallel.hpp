#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace hostlab {

// Worker count: set_thread_count() override, else HOSTLAB_THREADS, else
// hardware concurrency. Always >= 1.
int thread_count();
void set_thread_count(int threads);  // <= 0 clears the override

// Runs body(i) for i in [0, n). Work units are claimed dynamically but every
// result must be written to slot i by the caller, so output order never
// depends on scheduling. Nested calls run serially. The first exception
// thrown by any unit is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

template <typename T, typename F>
std::vector<T> parallel_map(std::size_t n, F&& f) {
  std::vector<T> out(n);
  parallel_for(n, [&](std::size_t i) { out[i] = f(i); });
  return out;
}

}  // namespace hostlab
