#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace opath {

/// Worker count from OPATH_SVM_JOBS, else the hardware concurrency (at least 1).
inline std::size_t default_jobs() {
    if (const char* env = std::getenv("OPATH_SVM_JOBS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

/**
 * Runs body(i) for i in [0, n) on up to `jobs` threads. Items are handed
 * out in index order; results must be written to per-index slots. If any
 * call throws, the exception of the lowest failing index is rethrown once
 * every worker has stopped.
 */
template <class F>
void parallel_for(std::size_t n, std::size_t jobs, F&& body) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const std::size_t k = std::min(jobs, n);
    pool.reserve(k - 1);
    for (std::size_t t = 1; t < k; ++t) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace opath
