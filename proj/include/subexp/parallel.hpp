#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace subexp {

// hardware concurrency capped by the SUBEXP_THREADS environment variable
inline int worker_count(std::size_t jobs) {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("SUBEXP_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0 && static_cast<unsigned>(cap) < hw)
            hw = static_cast<unsigned>(cap);
    }
    const std::size_t j = jobs > 0 ? jobs : 1;
    return static_cast<int>(std::min<std::size_t>(hw, j));
}

// f(i) for i in [0, n), split into contiguous blocks; each index writes only
// its own slot, so results do not depend on the worker count
template <class F>
void parallel_for(std::size_t n, F f) {
    const int workers = worker_count(n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::mutex mu;
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (int t = 0; t < workers; ++t) {
        const std::size_t lo = static_cast<std::size_t>(t) * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace subexp
