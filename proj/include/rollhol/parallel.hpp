#ifndef ROLLHOL_PARALLEL_HPP
#define ROLLHOL_PARALLEL_HPP

#include <functional>

namespace rollhol {

/// Worker count: `requested` when positive, else hardware concurrency,
/// always capped by the ROLLHOL_THREADS environment variable.
int worker_count(int requested = 0);

/// Runs fn(0..count-1) on up to `threads` workers (strided); rethrows the
/// first exception. Output slots indexed by i keep results deterministic.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

}  // namespace rollhol

#endif
