#include "belief_divide/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace belief_divide {

namespace {
std::atomic<std::size_t> g_threads{0};
// Nested loops run serially inside a worker.
thread_local bool t_in_worker = false;

struct WorkerScope {
    bool previous = t_in_worker;
    WorkerScope() { t_in_worker = true; }
    ~WorkerScope() { t_in_worker = previous; }
};
}

void set_thread_count(std::size_t n) { g_threads = n; }

std::size_t thread_count() {
    const std::size_t n = g_threads.load();
    if (n != 0) return n;
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    const std::size_t workers = t_in_worker ? 1 : std::min(thread_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto run = [&] {
        WorkerScope scope;
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = n;
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

double tree_sum(std::span<const double> values) {
    if (values.empty()) return 0.0;
    if (values.size() <= 8) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return tree_sum(values.first(half)) + tree_sum(values.subspan(half));
}

}  // namespace belief_divide
