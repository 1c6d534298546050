#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>

namespace proxyad {

// Error taxonomy; the CLI maps these to exit codes (config 2, data 3,
// divergence 4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

// Deterministic RNG built on std::mt19937_64 (its sequence is fixed by the
// standard) with hand-rolled draw functions so results do not depend on
// library-specific distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return (engine_() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi], inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  // Standard normal via Box-Muller; consumes two draws per call.
  double normal();

  // Independent child stream keyed by `tag`.
  Rng child(std::uint64_t tag) const { return Rng(derive(seed_, tag)); }

  // Stable seed derivation for per-sample / per-role streams.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b = 0, std::uint64_t c = 0);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// Worker cap from PROXYAD_THREADS (>=1); defaults to hardware concurrency.
int thread_count();

// Runs fn(i) for i in [0, n). Work must be pure per-index; callers own any
// ordered reduction.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace proxyad
