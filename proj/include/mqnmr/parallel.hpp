#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace mqnmr {

// Number of workers from MQNMR_WORKERS, falling back to 1.
int default_worker_count();

// Runs task(i) for every i in order[0..n) on up to `workers` threads. Tasks
// are claimed in the given order; each task must write only to its own
// output slot. If any task throws, the exception of the lowest claimed
// position is rethrown after all threads join.
template <typename Task>
void parallel_for(const std::vector<std::size_t>& order, int workers, Task&& task) {
    const std::size_t n = order.size();
    if (n == 0) {
        return;
    }
    const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
    if (threads == 1) {
        for (std::size_t pos = 0; pos < n; ++pos) {
            task(order[pos]);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::size_t error_pos = n;
    std::exception_ptr error;
    auto worker = [&] {
        for (;;) {
            const std::size_t pos = next.fetch_add(1);
            if (pos >= n) {
                return;
            }
            try {
                task(order[pos]);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (pos < error_pos) {
                    error_pos = pos;
                    error = std::current_exception();
                }
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back(worker);
    }
    pool.clear();
    if (error) {
        std::rethrow_exception(error);
    }
}

template <typename Task>
void parallel_for(std::size_t n, int workers, Task&& task) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order[i] = i;
    }
    parallel_for(order, workers, std::forward<Task>(task));
}

}  // namespace mqnmr
