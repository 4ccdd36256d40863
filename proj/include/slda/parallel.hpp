#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace slda {

/// 0 means "use the available hardware parallelism".
inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs body(i) for i in [0, n) on up to `threads` workers. The first
/// exception thrown by any body is rethrown on the calling thread.
template <class Body>
void parallel_for(std::size_t n, int threads, Body body) {
  const auto workers = static_cast<std::size_t>(std::max(1, std::min<int>(resolve_threads(threads),
                                                                          static_cast<int>(n))));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next.store(n);
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Number of partitions used by partitioned_reduce. Fixed so that the
/// floating-point summation order never depends on the thread count.
inline constexpr std::size_t kReducePartitions = 8;

/// Folds items [0, n) into accumulators over a fixed partition of the index
/// range, then merges the partials in partition order. Results are bitwise
/// identical for every thread count.
template <class Acc, class Make, class Fold>
Acc partitioned_reduce(std::size_t n, int threads, Make make, Fold fold) {
  const std::size_t parts = std::max<std::size_t>(1, std::min(kReducePartitions, n));
  std::vector<std::optional<Acc>> partial(parts);
  parallel_for(parts, threads, [&](std::size_t p) {
    const std::size_t begin = n * p / parts;
    const std::size_t end = n * (p + 1) / parts;
    Acc acc = make();
    for (std::size_t i = begin; i < end; ++i) fold(acc, i);
    partial[p].emplace(std::move(acc));
  });
  Acc total = std::move(*partial[0]);
  for (std::size_t p = 1; p < parts; ++p) total.merge(*partial[p]);
  return total;
}

}  // namespace slda
