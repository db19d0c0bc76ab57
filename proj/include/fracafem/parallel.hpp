#pragma once

#include <functional>

namespace fracafem {

/// Worker count: FRAC_AFEM_THREADS if set and positive, else hardware concurrency.
int worker_count();

/// Runs body(i) for i in [0, n) on up to worker_count() threads. Each index is
/// processed exactly once; results must be written to per-index slots.
void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace fracafem
