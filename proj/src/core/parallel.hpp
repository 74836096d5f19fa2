#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace charstrip {

/// Worker count from CHARSTRIP_THREADS, defaulting to the hardware concurrency.
inline int thread_count() {
    if (const char* s = std::getenv("CHARSTRIP_THREADS")) {
        int v = std::atoi(s);
        if (v >= 1) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(i) for i in [begin, end) on static contiguous chunks. Every index is
/// handled by exactly one worker, so results never depend on the thread count.
template <class Fn>
void parallel_for(int begin, int end, Fn&& fn) {
    const int count = end - begin;
    if (count <= 0) return;
    const int workers = std::min(thread_count(), std::max(1, count / 64));
    if (workers <= 1) {
        for (int i = begin; i < end; ++i) fn(i);
        return;
    }
    std::exception_ptr first;
    std::mutex mu;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        int lo = begin + static_cast<int>(static_cast<long long>(count) * w / workers);
        int hi = begin + static_cast<int>(static_cast<long long>(count) * (w + 1) / workers);
        pool.emplace_back([&, lo, hi] {
            try {
                for (int i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!first) first = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first) std::rethrow_exception(first);
}

}  // namespace charstrip
