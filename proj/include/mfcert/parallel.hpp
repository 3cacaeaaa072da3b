#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace mfcert {

/// Global cap on worker threads for all module-level parallelism. 0 or 1
/// means run inline. Defaults to MFCERT_THREADS when set, else 1.
void set_threads(unsigned n);
unsigned threads();

/// Runs body(k) for k in [0, n_tasks). Tasks are claimed dynamically but
/// each writes only its own slot, so callers that reduce the per-task results
/// in index order get output independent of the thread count.
void parallel_for(std::size_t n_tasks, const std::function<void(std::size_t)>& body);

/// Splits [0, n) into fixed-size blocks (the split does not depend on the
/// thread count), evaluates block_sum(begin, end) for each, and adds the
/// partial sums in block order.
double ordered_block_sum(std::size_t n, std::size_t block,
                         const std::function<double(std::size_t, std::size_t)>& block_sum);

}  // namespace mfcert
