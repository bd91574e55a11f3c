#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace flexcircle {

// Worker count from FLEXCIRCLE_THREADS, else the hardware concurrency.
inline unsigned thread_count() {
  if (const char* s = std::getenv("FLEXCIRCLE_THREADS")) {
    try {
      long n = std::stol(s);
      if (n >= 1) return static_cast<unsigned>(std::min(n, 256L));
    } catch (const std::exception&) {
    }
  }
  unsigned h = std::thread::hardware_concurrency();
  return h ? h : 1;
}

// Runs f(i) for i in [0, n). Results must be written to per-index slots, so
// the outcome does not depend on scheduling. The exception of the lowest
// failing index is rethrown.
template <class F>
void parallel_for(size_t n, F&& f, unsigned threads = 0) {
  if (threads == 0) threads = thread_count();
  threads = static_cast<unsigned>(std::min<size_t>(threads, n));
  if (threads <= 1) {
    for (size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr err;
  size_t err_at = n;
  std::mutex m;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (;;) {
        size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> g(m);
          if (i < err_at) {
            err = std::current_exception();
            err_at = i;
          }
        }
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace flexcircle
