#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace faultcast {

/// Runs fn(worker, begin, end) over a contiguous partition of [0, n) on at
/// most `jobs` threads; worker < max(jobs, 1) indexes a per-worker slot.
/// Callers write results into per-index or per-worker slots and merge in
/// worker order, so the outcome is identical for any job count; that is the
/// whole determinism contract for parallel campaigns, folds, and grid points.
template <typename Fn>
void parallel_for(size_t n, int jobs, Fn&& fn) {
  if (n == 0) return;
  size_t workers = jobs < 1 ? 1 : static_cast<size_t>(jobs);
  if (workers > n) workers = n;
  if (workers == 1) {
    fn(size_t{0}, size_t{0}, n);
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(workers);
  size_t chunk = n / workers, rem = n % workers, begin = 0;
  for (size_t w = 0; w < workers; ++w) {
    size_t len = chunk + (w < rem ? 1 : 0);
    threads.emplace_back([&fn, w, begin, len] { fn(w, begin, begin + len); });
    begin += len;
  }
  for (auto& t : threads) t.join();
}

}  // namespace faultcast
