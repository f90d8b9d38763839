#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hjlab {

/// Applies fn to every item on up to `workers` threads. Results keep input
/// order; the first exception (by item index) is rethrown after all threads join.
template <class T, class Fn>
auto parallel_map(const std::vector<T>& items, int workers, Fn fn) -> std::vector<decltype(fn(items[0]))> {
    using R = decltype(fn(items[0]));
    const std::size_t n = items.size();
    std::vector<R> out(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                out[i] = fn(items[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t nthreads = std::min<std::size_t>(n, static_cast<std::size_t>(workers > 0 ? workers : 1));
    if (nthreads <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

}  // namespace hjlab
