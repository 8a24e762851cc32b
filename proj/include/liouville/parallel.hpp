#ifndef LIOUVILLE_PARALLEL_HPP_
#define LIOUVILLE_PARALLEL_HPP_

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace liouville {

// Evaluates fn(i) for i in [0, n) on `workers` threads, batch by batch. Results
// land at their own index, so any reduction over the output is independent of
// the worker count.
template <class T, class F>
std::vector<T> parallel_map(std::int64_t n, int workers, int batch, F&& fn) {
  std::vector<T> out(static_cast<std::size_t>(n));
  batch = std::max(1, batch);
  const std::int64_t n_batches = (n + batch - 1) / batch;
  std::atomic<std::int64_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto run = [&] {
    for (;;) {
      const std::int64_t b = next.fetch_add(1);
      if (b >= n_batches) return;
      try {
        const std::int64_t hi = std::min(n, (b + 1) * batch);
        for (std::int64_t i = b * batch; i < hi; ++i) out[static_cast<std::size_t>(i)] = fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
        next = n_batches;
      }
    }
  };
  workers = std::max(1, workers);
  if (workers == 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(run);
    for (auto& t : pool) t.join();
  }
  if (err) std::rethrow_exception(err);
  return out;
}

}  // namespace liouville

#endif  // LIOUVILLE_PARALLEL_HPP_
