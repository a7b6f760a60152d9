/*
 * Copyright (C) 2026 The etmpc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#include <omp.h>

namespace etmpc {

/// Selects between the OpenMP kernel and the serial reference loop. Both
/// paths visit the same indices and write to disjoint slots, so results are
/// identical regardless of thread count.
enum class Execution { serial, parallel };

/// Caps the OpenMP worker count; 0 keeps the runtime default.
inline void set_worker_count(int jobs) {
  if (jobs > 0) omp_set_num_threads(jobs);
}

/// Calls body(i) for i in [0, n). Exceptions thrown inside the parallel
/// region are captured and the first one is rethrown on the calling thread.
template <class Body>
void for_each_index(Execution exec, std::size_t n, Body&& body) {
  if (exec == Execution::serial || n < 2 || omp_in_parallel()) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const long count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace etmpc
