#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

namespace bivboost {

// 64-bit mixer used to derive independent substream seeds (per-row seeds for
// Monte Carlo metrics, per-dataset seeds in the simulator).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(index + 1));
}

// Deterministic random stream. mt19937_64 output is fixed by the standard,
// and all transforms below are hand-rolled, so identical seeds give identical
// draws on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n).
  std::int64_t uniform_int(std::int64_t n) {
    auto v = static_cast<std::int64_t>(uniform() * static_cast<double>(n));
    return v >= n ? n - 1 : v;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Exact Poisson draw: multiplicative inversion for small rates, Hörmann's
  // PTRS transformed rejection for large ones. Both only consume uniforms
  // from this stream.
  long poisson(double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("poisson rate must be >= 0");
    if (lambda == 0.0) return 0;
    return lambda < 10.0 ? poisson_small(lambda) : poisson_ptrs(lambda);
  }

 private:
  long poisson_small(double lambda) {
    const double limit = std::exp(-lambda);
    long k = 0;
    double prod = uniform();
    while (prod > limit) {
      ++k;
      prod *= uniform();
    }
    return k;
  }

  long poisson_ptrs(double lambda) {
    const double log_lambda = std::log(lambda);
    const double b = 0.931 + 2.53 * std::sqrt(lambda);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    while (true) {
      const double u = uniform() - 0.5;
      const double v = uniform();
      const double us = 0.5 - std::abs(u);
      const double kd = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
      if (us >= 0.07 && v <= v_r) return static_cast<long>(kd);
      if (kd < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
          -lambda + kd * log_lambda - std::lgamma(kd + 1.0)) {
        return static_cast<long>(kd);
      }
    }
  }

  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// log(n!) with a cached table for the integer range hit in likelihood loops.
double log_factorial(long n);

inline double log_choose(long n, long k) {
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

// Runs fn(begin, end) over [0, n) split across `threads` workers. Falls back
// to a direct call for tiny ranges or a single thread. The first exception
// thrown by a worker is rethrown on the calling thread.
void parallel_for(std::int64_t n, int threads,
                  const std::function<void(std::int64_t, std::int64_t)>& fn);

}  // namespace bivboost
