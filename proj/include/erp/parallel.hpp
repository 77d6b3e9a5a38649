#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace erp {

/// Splits [0, n) into contiguous chunks and runs `body(begin, end)` on up to
/// `threads` workers. Each index is visited by exactly one worker, so bodies
/// that only write slot `i` for `i` in their chunk need no synchronisation.
template <class Body>
void parallel_for(std::size_t n, int threads, Body&& body) {
    const std::size_t workers =
        std::max<std::size_t>(1, std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1))));
    if (workers <= 1) {
        body(std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        pool.emplace_back([&, w, begin, end] {
            try {
                if (begin < end) body(begin, end);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace erp
