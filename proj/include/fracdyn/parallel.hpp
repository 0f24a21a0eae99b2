#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace fracdyn {

/// Splits [0, n) into contiguous chunks and runs fn(begin, end) on each, one
/// chunk per worker. Every cell/point computation in this library is a pure
/// function of its index, so results are identical for any thread count.
/// threads == 0 picks the hardware concurrency; threads == 1 runs inline.
template <typename Fn>
void parallel_chunks(long n, int threads, Fn&& fn) {
    if (n <= 0) return;
    unsigned hw = std::thread::hardware_concurrency();
    long t = threads > 0 ? threads : (hw > 0 ? static_cast<long>(hw) : 1);
    t = std::min<long>(t, n);
    if (t <= 1) {
        fn(0L, n);
        return;
    }

    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(t));
    const long chunk = (n + t - 1) / t;
    for (long w = 0; w < t; ++w) {
        const long lo = w * chunk;
        const long hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&fn, &errors, w, lo, hi] {
            try {
                fn(lo, hi);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace fracdyn
