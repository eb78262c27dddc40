#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

#include "halfline/phase.hpp"

namespace halfline::detail {

/// Runs body(begin, end) over contiguous chunks of [0, count). The first
/// exception thrown by any chunk is rethrown on the calling thread.
template <class Body>
void parallel_for(std::size_t count, Body&& body, std::size_t min_chunk = 64) {
  const std::size_t workers =
      std::min<std::size_t>(default_thread_count(), std::max<std::size_t>(1, count / min_chunk));
  if (workers <= 1) {
    body(std::size_t{0}, count);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  const std::size_t step = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t b = w * step, e = std::min(count, b + step);
    if (b >= e) break;
    pool.emplace_back([&, w, b, e] {
      try {
        body(b, e);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace halfline::detail
