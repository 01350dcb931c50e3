#pragma once
// Replica-level work sharing. Each replica writes only its own output slot
// and derives its own random streams, so results are independent of the
// thread count and schedule.

#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mssk::par {

inline int default_threads() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  return static_cast<int>(hw > 8 ? 8 : hw);
}

template <class Fn>
void for_each_replica(int64_t replicas, int threads, Fn&& fn) {
  if (threads <= 0) threads = default_threads();
  if (threads > replicas) threads = static_cast<int>(replicas);
  if (threads <= 1) {
    for (int64_t r = 0; r < replicas; ++r) fn(r);
    return;
  }
  std::atomic<int64_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        int64_t r = next.fetch_add(1);
        if (r >= replicas) return;
        try {
          fn(r);
        } catch (...) {
          std::lock_guard<std::mutex> lk(err_mu);
          if (!err) err = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace mssk::par
