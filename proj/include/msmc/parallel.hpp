#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace msmc::probkit {

/// Runs fn(begin, end) over [0, count) split into `chunk`-sized blocks spread
/// across `threads` workers. Block boundaries depend only on `chunk`, never on
/// the thread count, so per-block results are reproducible. The first
/// exception thrown by any block is rethrown on the calling thread.
template <class Fn>
void parallel_chunks(std::size_t count, std::size_t chunk, unsigned threads, Fn&& fn) {
  chunk = std::max<std::size_t>(chunk, 1);
  const std::size_t blocks = (count + chunk - 1) / chunk;
  const auto run_block = [&](std::size_t b) { fn(b * chunk, std::min(count, (b + 1) * chunk)); };
  if (threads <= 1 || blocks <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) {
      run_block(b);
    }
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const unsigned workers = std::min<unsigned>(threads, static_cast<unsigned>(blocks));
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t b = w; b < blocks; b += workers) {
        try {
          run_block(b);
        } catch (...) {
          const std::lock_guard lock(failure_mutex);
          if (!failure) {
            failure = std::current_exception();
          }
          return;
        }
      }
    });
  }
  pool.clear();
  if (failure) {
    std::rethrow_exception(failure);
  }
}

}  // namespace msmc::probkit
