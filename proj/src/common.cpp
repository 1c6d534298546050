#include "proxyad/common.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <thread>
#include <vector>

namespace proxyad {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw ArgumentError("uniform_int: empty range");
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(engine_());
  // Rejection sampling keeps the draw exactly uniform.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  std::uint64_t r;
  do {
    r = engine_();
  } while (r >= limit);
  return lo + static_cast<std::int64_t>(r % span);
}

double Rng::normal() {
  double u1 = uniform();
  const double u2 = uniform();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
  std::uint64_t s = seed;
  std::uint64_t out = splitmix64(s);
  s ^= a * 0xD1B54A32D192ED03ULL;
  out ^= splitmix64(s);
  s ^= b * 0x8CB92BA72F3D8DD7ULL;
  out ^= splitmix64(s);
  s ^= c * 0xEB44ACCAB455D165ULL;
  out ^= splitmix64(s);
  return out;
}

int thread_count() {
  static const int cached = [] {
    if (const char* env = std::getenv("PROXYAD_THREADS")) {
      const long v = std::strtol(env, nullptr, 10);
      if (v >= 1) return static_cast<int>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }();
  return cached;
}

void parallel_for(int n, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  const int workers = std::min(thread_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([t, n, workers, &fn] {
      for (int i = t; i < n; i += workers) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace proxyad
