#pragma once

// Minimal worker-pool helper. The environment variable NEEDLECOMP_THREADS
// caps the number of workers (default: hardware concurrency). All parallel
// loops in this library are embarrassingly parallel over immutable inputs.

#include <cstdlib>
#include <exception>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace needlecomp {

inline unsigned worker_count() {
  static const unsigned cached = [] {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("NEEDLECOMP_THREADS")) {
      try {
        long v = std::stol(env);
        if (v >= 1 && v <= 256) hw = static_cast<unsigned>(v);
      } catch (const std::exception&) {
        // Unparsable values fall back to the hardware default.
      }
    }
    return hw;
  }();
  return cached;
}

// Runs body(i) for i in [0, n). Exceptions from workers are rethrown on the
// calling thread (first one wins).
template <class F>
void parallel_for(std::size_t n, F&& body) {
  const unsigned workers = worker_count();
  if (workers <= 1 || n < 2 * workers) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi, w] {
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace needlecomp
