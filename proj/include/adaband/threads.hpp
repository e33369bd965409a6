#ifndef ADABAND_THREADS_HPP
#define ADABAND_THREADS_HPP

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace adaband {

// Resolve a worker count: explicit flag wins, then the ADABAND_THREADS
// environment variable, then all cores (value 0 means "all cores").
inline int resolve_threads(int flag_value, bool flag_given) {
  long v = flag_value;
  if (!flag_given) {
    if (const char* env = std::getenv("ADABAND_THREADS")) {
      char* end = nullptr;
      v = std::strtol(env, &end, 10);
      if (end == env || *end != '\0' || v < 0)
        throw std::invalid_argument("ADABAND_THREADS must be a nonnegative integer");
    } else {
      v = 0;
    }
  }
  if (v < 0) throw std::invalid_argument("thread count must be nonnegative");
  if (v == 0) {
    unsigned hc = std::thread::hardware_concurrency();
    v = hc == 0 ? 1 : static_cast<long>(hc);
  }
  return static_cast<int>(v);
}

// Run body(i) for i in [0, count) on up to `threads` workers.  Work is handed
// out by an atomic counter; results must be written to per-index slots so the
// outcome does not depend on scheduling.
template <typename F>
inline void parallel_for(int count, int threads, F&& body) {
  if (count <= 0) return;
  if (threads <= 1 || count == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  int workers = std::min(threads, count);
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= count || failed.load()) return;
        try {
          body(i);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failed.load() && error) std::rethrow_exception(error);
}

}  // namespace adaband

#endif
