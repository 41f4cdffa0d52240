// Copyright 2026 The bsmm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace bsmm {

// Runs fn(begin, end, worker) over [0, n) split into contiguous chunks of
// `grain` items handed out dynamically to `threads` workers. The first
// exception thrown by any worker is rethrown on the calling thread.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, std::size_t grain, Fn&& fn) {
  grain = std::max<std::size_t>(grain, 1);
  threads = std::max<std::size_t>(threads, 1);
  if (threads == 1 || n <= grain) {
    for (std::size_t b = 0; b < n; b += grain) fn(b, std::min(n, b + grain), std::size_t{0});
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto work = [&](std::size_t worker) {
    try {
      for (;;) {
        const std::size_t b = next.fetch_add(grain);
        if (b >= n) break;
        fn(b, std::min(n, b + grain), worker);
      }
    } catch (...) {
      std::lock_guard lock(error_mu);
      if (!error) error = std::current_exception();
      next = n;
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(threads - 1);
  for (std::size_t w = 1; w < threads; ++w) pool.emplace_back(work, w);
  work(0);
  pool.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace bsmm
