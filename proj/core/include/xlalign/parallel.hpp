#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace xlalign {

// Worker cap from XLALIGN_THREADS; defaults to 1 so runs are bit-reproducible.
inline std::size_t worker_count() {
  const char* env = std::getenv("XLALIGN_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  try {
    long n = std::stol(env);
    return n < 1 ? 1 : static_cast<std::size_t>(n);
  } catch (...) {
    return 1;
  }
}

// Runs fn(i) for i in [0, n) over contiguous blocks. Each index is handled by
// exactly one worker, so callers that write only slot i stay order-preserving.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t block = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w * block; i < std::min(n, (w + 1) * block); ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace xlalign
