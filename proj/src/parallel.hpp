#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

#include "tfimpute/tensor.hpp"

namespace tfimpute::detail {

// Runs body(i) for i in [0, n) over contiguous chunks.  Each index must write
// only its own output slot, so results do not depend on the thread count.
template <typename Body>
void parallel_for(Index n, unsigned threads, Body&& body) {
  const auto workers = static_cast<Index>(std::max(1u, threads));
  if (workers == 1 || n < 2) {
    for (Index i = 0; i < n; ++i) body(i);
    return;
  }
  const Index used = std::min(workers, n);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(used));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(used));
  for (Index w = 0; w < used; ++w) {
    const Index begin = n * w / used;
    const Index end = n * (w + 1) / used;
    pool.emplace_back([&, w, begin, end] {
      try {
        for (Index i = begin; i < end; ++i) body(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace tfimpute::detail
