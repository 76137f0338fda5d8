#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace hbmo {

/// Worker count honoured by every parallel loop. Reads HBMO_THREADS once;
/// falls back to the hardware concurrency.
inline std::size_t thread_count() {
    static const std::size_t count = [] {
        if (const char* env = std::getenv("HBMO_THREADS")) {
            try {
                const long v = std::stol(env);
                if (v >= 1) return static_cast<std::size_t>(v);
            } catch (...) {
            }
        }
        return static_cast<std::size_t>(std::max(1u, std::thread::hardware_concurrency()));
    }();
    return count;
}

/// Runs body(begin, end) over contiguous blocks of [0, n). Each index is
/// visited by exactly one worker and per-index work must not depend on the
/// block split, so results are bit-identical for any thread count.
template <class Body>
void parallel_for(std::size_t n, Body&& body, std::size_t min_block = 4096) {
    const std::size_t workers = std::min(thread_count(), (n + min_block - 1) / std::max<std::size_t>(min_block, 1));
    if (workers <= 1) {
        body(std::size_t{0}, n);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 1; w < workers; ++w) {
        const std::size_t b = w * chunk;
        const std::size_t e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&body, b, e] { body(b, e); });
    }
    body(std::size_t{0}, std::min(n, chunk));
}

} // namespace hbmo
