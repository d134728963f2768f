#include "retex/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace retex {

namespace {
std::atomic<int> g_thread_cap{0};
}

void set_thread_cap(int n) { g_thread_cap.store(n < 0 ? 0 : n); }

int thread_cap() { return g_thread_cap.load(); }

int effective_threads() {
    int cap = g_thread_cap.load();
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 1;
    return cap > 0 ? std::min(cap, hw) : hw;
}

void parallel_chunks(int begin, int end, const std::function<void(int, int)>& body) {
    const int n = end - begin;
    if (n <= 0) return;
    const int workers = std::min(effective_threads(), n);
    if (workers <= 1) {
        body(begin, end);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const int base = n / workers;
    const int extra = n % workers;
    int at = begin;
    for (int w = 0; w < workers; ++w) {
        const int len = base + (w < extra ? 1 : 0);
        const int lo = at;
        const int hi = at + len;
        at = hi;
        pool.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
    for (auto& t : pool) t.join();
}

void parallel_for(int begin, int end, const std::function<void(int)>& body) {
    parallel_chunks(begin, end, [&body](int lo, int hi) {
        for (int i = lo; i < hi; ++i) body(i);
    });
}

} // namespace retex
