#include "defkit/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace defkit {

namespace {
std::atomic<unsigned> g_threads{1};
}

void set_thread_count(unsigned count) {
  if (count == 0) count = std::max(1u, std::thread::hardware_concurrency());
  g_threads.store(count);
}

unsigned thread_count() { return g_threads.load(); }

void parallel_for(std::ptrdiff_t begin, std::ptrdiff_t end, const std::function<void(std::ptrdiff_t)>& body) {
  const std::ptrdiff_t n = end - begin;
  if (n <= 0) return;
  const auto workers = static_cast<std::ptrdiff_t>(std::min<std::ptrdiff_t>(thread_count(), n));
  if (workers <= 1) {
    for (std::ptrdiff_t i = begin; i < end; ++i) body(i);
    return;
  }

  std::atomic<std::ptrdiff_t> next{begin};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    for (std::ptrdiff_t i = next++; i < end; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = end;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers - 1));
  for (std::ptrdiff_t t = 1; t < workers; ++t) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace defkit
