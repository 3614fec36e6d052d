#pragma once

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rotape {

// Runs fn(0..n-1) on up to `threads` workers with a static stride split, so
// the index-to-worker assignment is fixed. The first exception is rethrown
// after all workers finish.
template <class Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  const int nt = std::max(1, std::min(threads, n));
  if (nt == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex mu;
  for (int t = 0; t < nt; ++t)
    pool.emplace_back([&, t] {
      try {
        for (int i = t; i < n; i += nt) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(mu);
        if (!err) err = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace rotape
