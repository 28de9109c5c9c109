#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace bohrlab {

// Worker count: BOHRLAB_THREADS wins, else hardware concurrency, else 1.
inline int worker_count() {
    if (const char* env = std::getenv("BOHRLAB_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

// Chunked parallel loop over [0, n).  Falls through to a plain loop for a
// single worker or small n, so results never depend on the thread count
// (each index is processed exactly once and writes only its own slot).
inline void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& body) {
    int workers = worker_count();
    if (workers <= 1 || n < 4096) {
        body(0, n);
        return;
    }
    std::int64_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        std::int64_t lo = w * chunk;
        std::int64_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        threads.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
    for (auto& t : threads) t.join();
}

// |a - b| <= abs_tol + rel_tol * max(|a|, |b|)
inline bool near(double a, double b, double rel_tol, double abs_tol = 0.0) {
    double diff = std::fabs(a - b);
    double scale = std::max(std::fabs(a), std::fabs(b));
    return diff <= abs_tol + rel_tol * scale;
}

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

} // namespace bohrlab
