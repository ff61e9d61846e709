#pragma once

#include <cstdint>
#include <thread>
#include <vector>

namespace reflkit {

inline int &thread_count_ref() {
    static int count = 1;
    return count;
}

inline int thread_count() { return thread_count_ref(); }

inline void set_thread_count(int n) {
    thread_count_ref() = n < 1 ? 1 : n;
}

// Runs f(i) for i in [begin, end), split into contiguous chunks per thread.
// Output must be written to disjoint locations keyed by i; with that
// discipline results are identical for any thread count.
template<typename F>
void parallel_for(int64_t begin, int64_t end, F &&f) {
    int64_t n = end - begin;
    if (n <= 0)
        return;
    int threads = thread_count();
    if (threads > n)
        threads = int(n);
    if (threads <= 1) {
        for (int64_t i = begin; i < end; ++i)
            f(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    int64_t chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        int64_t lo = begin + t * chunk;
        int64_t hi = lo + chunk < end ? lo + chunk : end;
        if (lo >= hi)
            break;
        pool.emplace_back([lo, hi, &f] {
            for (int64_t i = lo; i < hi; ++i)
                f(i);
        });
    }
    for (auto &th : pool)
        th.join();
}

// Sum of term(i) over [0, n) with a fixed reduction tree: per-chunk partial
// sums (chunk size independent of thread count) combined in index order.
// The result is bit-identical for any thread count.
template<typename F>
double deterministic_sum(int64_t n, F &&term) {
    constexpr int64_t kChunk = 4096;
    if (n <= 0)
        return 0.0;
    int64_t chunks = (n + kChunk - 1) / kChunk;
    std::vector<double> partial(size_t(chunks), 0.0);
    parallel_for(0, chunks, [&](int64_t c) {
        int64_t lo = c * kChunk;
        int64_t hi = lo + kChunk < n ? lo + kChunk : n;
        double s = 0.0;
        for (int64_t i = lo; i < hi; ++i)
            s += term(i);
        partial[size_t(c)] = s;
    });
    double total = 0.0;
    for (double s : partial)
        total += s;
    return total;
}

} // namespace reflkit
