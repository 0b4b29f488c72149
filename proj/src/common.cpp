#include "bivboost/common.hpp"

#include <algorithm>
#include <exception>
#include <mutex>

namespace bivboost {

namespace {

constexpr long kFactorialTableSize = 100000;

std::vector<double> build_log_factorial_table() {
  std::vector<double> t(kFactorialTableSize);
  t[0] = 0.0;
  for (long n = 1; n < kFactorialTableSize; ++n) t[n] = t[n - 1] + std::log(static_cast<double>(n));
  return t;
}

}  // namespace

double log_factorial(long n) {
  if (n < 0) throw std::domain_error("log_factorial: negative argument");
  static const std::vector<double> table = build_log_factorial_table();
  if (n < kFactorialTableSize) return table[static_cast<std::size_t>(n)];
  return std::lgamma(static_cast<double>(n) + 1.0);
}

void parallel_for(std::int64_t n, int threads,
                  const std::function<void(std::int64_t, std::int64_t)>& fn) {
  if (n <= 0) return;
  const int workers = std::min<std::int64_t>(std::max(threads, 1), n);
  if (workers <= 1 || n < 64) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const std::int64_t chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const std::int64_t lo = w * chunk;
    const std::int64_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        fn(lo, hi);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace bivboost
