#include "zrudc/parallel.hpp"

#include <cstdlib>
#include <string>

namespace zrudc {

int max_threads() {
    static const int cached = [] {
        if (const char* env = std::getenv("ZRUDC_THREADS")) {
            int n = std::atoi(env);
            if (n >= 1) return n;
        }
        unsigned hw = std::thread::hardware_concurrency();
        return hw ? static_cast<int>(hw) : 1;
    }();
    return cached;
}

namespace detail {

void run_chunked(int64_t begin, int64_t end, int64_t min_grain,
                 const std::function<void(int64_t, int64_t)>& chunk_fn) {
    const int64_t n = end - begin;
    if (n <= 0) return;
    int workers = max_threads();
    if (min_grain > 1) workers = static_cast<int>(std::min<int64_t>(workers, (n + min_grain - 1) / min_grain));
    workers = static_cast<int>(std::min<int64_t>(workers, n));
    if (workers <= 1) {
        chunk_fn(begin, end);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers - 1));
    const int64_t step = (n + workers - 1) / workers;
    for (int w = 1; w < workers; ++w) {
        int64_t lo = begin + step * w;
        int64_t hi = std::min(end, lo + step);
        if (lo >= hi) break;
        pool.emplace_back(chunk_fn, lo, hi);
    }
    chunk_fn(begin, std::min(end, begin + step));
    for (auto& t : pool) t.join();
}

}  // namespace detail
}  // namespace zrudc
