#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace nms {

void set_thread_count(int n);  // 0 = hardware concurrency
int thread_count();

/// Runs f(i) for i in [0, n) over static contiguous chunks. Callers write
/// results into per-index slots and reduce afterwards in index order, which
/// keeps every sum independent of the thread count.
template <class F>
void parallel_for(std::size_t n, F&& f) {
    const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
    if (threads <= 1 || n < 64) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                const std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
                for (std::size_t i = lo; i < hi; ++i) f(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace nms
