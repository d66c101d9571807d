#pragma once

#include <functional>

namespace lesets {

/// Serial reference loop; the behavioral baseline every parallel run must match.
void run_serial(int n, const std::function<void(int)>& fn);

/// OpenMP loop over [0, n). Jobs must write only to their own slot so results
/// are identical to run_serial for any thread count. threads <= 1 falls back
/// to the serial path.
void run_parallel(int n, int threads, const std::function<void(int)>& fn);

int hardware_threads();

} // namespace lesets
