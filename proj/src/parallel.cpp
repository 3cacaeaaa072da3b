#include "mfcert/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace mfcert {
namespace {

unsigned initial_threads() {
  if (const char* env = std::getenv("MFCERT_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return 1;
}

std::atomic<unsigned>& thread_cap() {
  static std::atomic<unsigned> cap{initial_threads()};
  return cap;
}

}  // namespace

void set_threads(unsigned n) { thread_cap().store(std::max(1u, n)); }

unsigned threads() { return thread_cap().load(); }

void parallel_for(std::size_t n_tasks, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(threads(), n_tasks);
  if (workers <= 1) {
    for (std::size_t k = 0; k < n_tasks; ++k) body(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= n_tasks) return;
      try {
        body(k);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(n_tasks);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

double ordered_block_sum(std::size_t n, std::size_t block,
                         const std::function<double(std::size_t, std::size_t)>& block_sum) {
  if (n == 0) return 0.0;
  block = std::max<std::size_t>(1, block);
  const std::size_t n_blocks = (n + block - 1) / block;
  std::vector<double> partial(n_blocks, 0.0);
  parallel_for(n_blocks, [&](std::size_t b) {
    const std::size_t lo = b * block;
    partial[b] = block_sum(lo, std::min(n, lo + block));
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace mfcert
