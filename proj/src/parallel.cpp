#include "lesets/parallel.hpp"

#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lesets {

void run_serial(int n, const std::function<void(int)>& fn) {
  for (int i = 0; i < n; ++i) fn(i);
}

void run_parallel(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || n <= 1) {
    run_serial(n, fn);
    return;
  }
#ifdef _OPENMP
  // Exceptions must not cross the OpenMP region boundary; capture the first
  // one and rethrow after the join.
  std::exception_ptr err;
  std::mutex err_mutex;
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (int i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(err_mutex);
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
#else
  run_serial(n, fn);
#endif
}

int hardware_threads() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

} // namespace lesets
