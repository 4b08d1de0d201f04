#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace sdg {

/// Runs fn(begin, end) over disjoint chunks of [0, n). With threads <= 1 the
/// call is inline. Chunk boundaries depend only on (n, threads), so any
/// worker count produces identical results as long as chunks write disjoint
/// outputs.
inline void parallel_for(int n, int threads, const std::function<void(int, int)>& fn) {
    if (threads <= 1 || n < 2 * threads) {
        fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const int chunk = (n + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
        const int lo = w * chunk;
        const int hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    for (auto& th : pool) th.join();
}

} // namespace sdg
