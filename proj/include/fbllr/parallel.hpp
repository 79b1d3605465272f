#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace fbllr {

/// Runs body(begin, end, worker) over a static partition of [0, n). Chunks are
/// contiguous and each index is visited exactly once, so results written to
/// per-index slots do not depend on the worker count. The first exception
/// thrown by any worker is rethrown on the calling thread.
template <class Body>
void parallel_for(std::size_t n, std::size_t workers, Body&& body) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        if (n > 0) body(std::size_t{0}, n, std::size_t{0});
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> threads;
    threads.reserve(workers - 1);
    const std::size_t chunk = n / workers;
    const std::size_t extra = n % workers;
    auto range = [&](std::size_t w) {
        const std::size_t begin = w * chunk + std::min(w, extra);
        return std::pair{begin, begin + chunk + (w < extra ? 1 : 0)};
    };
    auto run = [&](std::size_t w) {
        try {
            const auto [b, e] = range(w);
            body(b, e, w);
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };
    for (std::size_t w = 1; w < workers; ++w) threads.emplace_back(run, w);
    run(0);
    for (auto& t : threads) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace fbllr
