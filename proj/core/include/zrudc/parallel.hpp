#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace zrudc {

/// Worker cap for intra-op parallelism. Reads ZRUDC_THREADS once; defaults to
/// the hardware thread count.
int max_threads();

namespace detail {
void run_chunked(int64_t begin, int64_t end, int64_t min_grain,
                 const std::function<void(int64_t, int64_t)>& chunk_fn);
}

/// Runs fn(i) for i in [begin, end) on up to max_threads() workers. Each index
/// is handled by exactly one worker, so results do not depend on the thread
/// count as long as fn writes only to locations owned by its index.
template <typename F>
void parallel_for(int64_t begin, int64_t end, F&& fn, int64_t min_grain = 1) {
    detail::run_chunked(begin, end, min_grain, [&](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) fn(i);
    });
}

}  // namespace zrudc
