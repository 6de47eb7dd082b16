#pragma once

// Deterministic parallel map: items are split into fixed contiguous chunks and
// every item writes only its own output slot, so results are bitwise identical
// for any thread count.

#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace tclab::par {

inline std::atomic<int>& thread_setting() {
    static std::atomic<int> n{0};  // 0 = auto
    return n;
}

inline void set_threads(int n) { thread_setting().store(n < 0 ? 0 : n); }

inline int resolve_threads() {
    int n = thread_setting().load();
    if (n > 0) return n;
    if (const char* env = std::getenv("TCLAB_THREADS")) {
        int e = std::atoi(env);
        if (e > 0) return e;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? int(hw) : 1;
}

template <typename Fn>
void parallel_for(long long n, Fn&& fn) {
    if (n <= 0) return;
    int threads = resolve_threads();
    if (threads > n) threads = int(n);
    if (threads <= 1) {
        for (long long i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::atomic<bool> failed{false};
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        long long lo = n * t / threads;
        long long hi = n * (t + 1) / threads;
        pool.emplace_back([&, lo, hi] {
            try {
                for (long long i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                if (!failed.exchange(true)) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace tclab::par
