#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace tsa {

/// Runs job(k) for k in [0, n) on up to `workers` threads, strided assignment.
/// The first exception (by index) is rethrown after all threads join.
template <class Job>
void parallel_for(std::size_t n, int workers, Job&& job)
{
    if (n == 0) return;
    std::vector<std::exception_ptr> errors(n);
    const std::size_t w = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1, n);
    auto run = [&](std::size_t first) {
        for (std::size_t k = first; k < n; k += w) {
            try {
                job(k);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    if (w == 1) {
        run(0);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < w; ++t) pool.emplace_back(run, t);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace tsa
