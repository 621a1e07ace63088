// Copyright 2026 The qetkd Authors
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
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace qetkd {

/// out[i] = f(in[i]) evaluated on a small thread pool. Output order is the input
/// order, so results never depend on scheduling. The first exception is rethrown.
template <class T, class F>
auto parallel_map(const std::vector<T>& in, F&& f, unsigned max_threads = 0)
    -> std::vector<decltype(f(in.front()))> {
  using R = decltype(f(in.front()));
  std::vector<R> out(in.size());
  unsigned workers = max_threads ? max_threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, in.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
    return out;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < in.size(); i += workers) {
        try {
          out[i] = f(in[i]);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

/// Inclusive grid of `count` points from start to stop.
inline std::vector<double> linspace(double start, double stop, int count) {
  std::vector<double> g;
  if (count <= 0) return g;
  if (count == 1) return {start};
  g.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    g.push_back(start + (stop - start) * static_cast<double>(i) / static_cast<double>(count - 1));
  }
  g.back() = stop;
  return g;
}

}  // namespace qetkd
