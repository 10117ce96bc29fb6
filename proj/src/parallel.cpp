#include "setinf/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace setinf {

namespace {
std::atomic<int> g_threads{0};
thread_local bool t_inside_worker = false;
}  // namespace

void set_default_threads(int n) { g_threads = std::max(n, 0); }

int default_threads() {
  const int n = g_threads.load();
  if (n > 0) return n;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, int threads) {
  if (n == 0) return;
  int workers = threads > 0 ? threads : default_threads();
  workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), n));
  if (workers <= 1 || t_inside_worker) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::size_t> error_index(static_cast<std::size_t>(workers), n);
  auto run = [&](std::size_t w) {
    t_inside_worker = true;
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) break;
      try {
        body(i);
      } catch (...) {
        if (i < error_index[w]) {
          error_index[w] = i;
          errors[w] = std::current_exception();
        }
      }
    }
    t_inside_worker = false;
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(run, static_cast<std::size_t>(w));
  run(0);
  for (auto& t : pool) t.join();
  std::size_t best = n;
  std::exception_ptr first;
  for (std::size_t w = 0; w < errors.size(); ++w) {
    if (errors[w] && error_index[w] < best) {
      best = error_index[w];
      first = errors[w];
    }
  }
  if (first) std::rethrow_exception(first);
}

}  // namespace setinf
