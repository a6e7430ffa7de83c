#pragma once

#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace qiup {

inline int resolve_workers(int workers) {
  if (workers > 0) return workers;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Runs fn(row, worker) for row in [0, rows), split into contiguous blocks
/// across at most resolve_workers(workers) threads. The partition depends
/// only on (rows, workers), and callers own any per-row output slots, so
/// results never depend on thread scheduling. `worker` indexes a private
/// scratch slot (always < resolve_workers(workers)). The first exception
/// thrown by any worker is rethrown.
inline void parallel_for_rows_indexed(int rows, int workers,
                                      const std::function<void(int, int)>& fn) {
  workers = resolve_workers(workers);
  if (workers <= 1 || rows <= 1) {
    for (int r = 0; r < rows; ++r) fn(r, 0);
    return;
  }
  if (workers > rows) workers = rows;
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<size_t>(workers));
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    const int begin = static_cast<int>(static_cast<long long>(rows) * w / workers);
    const int end = static_cast<int>(static_cast<long long>(rows) * (w + 1) / workers);
    pool.emplace_back([&, begin, end, w] {
      try {
        for (int r = begin; r < end; ++r) fn(r, w);
      } catch (...) {
        errors[static_cast<size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline void parallel_for_rows(int rows, int workers, const std::function<void(int)>& fn) {
  parallel_for_rows_indexed(rows, workers, [&fn](int r, int) { fn(r); });
}

}  // namespace qiup
