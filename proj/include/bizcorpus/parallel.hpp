#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace bizcorpus {

inline unsigned default_parallelism() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Runs fn(begin, end) over contiguous shards of [0, n) and returns once all
/// shards finish. Shard k always covers the same index range for a given
/// (n, workers), so per-shard results merged in shard order are deterministic.
/// The first exception thrown by any shard is rethrown.
inline void for_each_shard(std::size_t n, unsigned workers,
                           const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  workers = std::max(1u, workers);
  const std::size_t shards = std::min<std::size_t>(workers, std::max<std::size_t>(n, 1));
  if (shards <= 1) {
    fn(0, 0, n);
    return;
  }
  std::vector<std::exception_ptr> errors(shards);
  std::vector<std::thread> threads;
  threads.reserve(shards);
  const std::size_t step = (n + shards - 1) / shards;
  for (std::size_t k = 0; k < shards; ++k) {
    const std::size_t begin = std::min(n, k * step);
    const std::size_t end = std::min(n, begin + step);
    threads.emplace_back([&, k, begin, end] {
      try {
        fn(k, begin, end);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Ordered parallel map: out[i] = fn(i).
template <typename Out, typename Fn>
std::vector<Out> parallel_map(std::size_t n, unsigned workers, Fn&& fn) {
  std::vector<Out> out(n);
  for_each_shard(n, workers, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = fn(i);
  });
  return out;
}

}  // namespace bizcorpus
