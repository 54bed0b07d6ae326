#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

namespace pmgeo {

/// Runs fn(i) for i in [0, n), in parallel when built with OpenMP. Each call
/// must write only to its own output slot; results are then independent of
/// the worker count. The exception from the lowest failing index is
/// rethrown after the loop.
template <class Fn>
void parallel_for(std::ptrdiff_t n, Fn&& fn) {
  std::exception_ptr error;
  std::ptrdiff_t error_index = n;
  std::mutex m;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
      std::lock_guard lock(m);
      if (i < error_index) {
        error_index = i;
        error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace pmgeo
