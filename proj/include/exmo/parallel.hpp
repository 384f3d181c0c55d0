#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#ifdef EXMO_HAVE_OPENMP
#include <omp.h>
#endif

namespace exmo {

/// Sets the worker count for parallel loops; 0 selects the number of
/// logical cores.
void set_thread_count(int threads);
int thread_count();

/// Runs fn(i) for i in [0, n). Iterations must write to disjoint outputs.
/// The first exception thrown by any iteration is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  std::exception_ptr error;
  std::mutex error_mutex;
#ifdef EXMO_HAVE_OPENMP
#pragma omp parallel for schedule(static) num_threads(thread_count())
#endif
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace exmo
