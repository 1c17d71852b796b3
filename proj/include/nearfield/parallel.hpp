// SPDX-License-Identifier: Apache-2.0
//
// nearfield-mc: near-field source localization under direction-dependent mutual coupling
// Copyright (C) 2026 nearfield-mc contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace nearfield {

/// Worker count for trial-level parallelism: hardware concurrency capped
/// by the NEARFIELD_THREADS environment variable and by the job count.
inline int worker_count(int jobs) {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (const char *env = std::getenv("NEARFIELD_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) n = std::min(n, cap);
    }
    return std::min(n, jobs);
}

/// Runs fn(0..n-1) with results expected to land in caller-owned,
/// per-index storage; indices are claimed atomically, so the work order
/// is scheduler-dependent but every index runs exactly once.
inline void parallel_for(int n, const std::function<void(int)> &fn) {
    const int workers = worker_count(n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next(0);
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto &t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

/// Deterministic pairwise summation over a fixed-order sequence; the
/// result does not depend on how the values were produced.
inline double pairwise_sum(const std::vector<double> &values, std::size_t begin,
                           std::size_t end) {
    const std::size_t n = end - begin;
    if (n == 0) return 0.0;
    if (n == 1) return values[begin];
    if (n == 2) return values[begin] + values[begin + 1];
    const std::size_t mid = begin + n / 2;
    return pairwise_sum(values, begin, mid) + pairwise_sum(values, mid, end);
}

inline double pairwise_sum(const std::vector<double> &values) {
    return pairwise_sum(values, 0, values.size());
}

}  // namespace nearfield
