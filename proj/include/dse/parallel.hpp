// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace dse {

int default_workers();

// Runs fn(i) for i in [0, n) across `workers` OpenMP threads. Callers write
// results into pre-sized, per-index slots and merge in index order, which
// makes stage output byte-identical for any worker count. If iterations
// throw, the exception from the lowest index is rethrown after the loop.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  if (workers <= 0) workers = default_workers();
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }

  std::exception_ptr first_error = nullptr;
  std::size_t first_error_index = n;
  std::mutex error_mutex;

#if defined(_OPENMP)
#pragma omp parallel for schedule(static) num_threads(workers)
#endif
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (static_cast<std::size_t>(i) < first_error_index) {
        first_error_index = static_cast<std::size_t>(i);
        first_error = std::current_exception();
      }
    }
  }

  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace dse
