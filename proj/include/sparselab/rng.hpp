#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace sparselab {

/// splitmix64 finalizer; bijective 64-bit mixing function.
std::uint64_t mix64(std::uint64_t x);

/// Order-dependent seed derivation. Chain calls to build one stream id per
/// (master seed, experiment, grid point, ...) tuple.
std::uint64_t seed_combine(std::uint64_t seed, std::uint64_t value);
std::uint64_t seed_combine(std::uint64_t seed, std::string_view tag);

/// Deterministic random stream. Distributions are implemented here rather
/// than with std:: distribution adaptors, whose output is
/// implementation-defined; identical seeds must give identical bytes.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform();

  /// Standard normal via Box-Muller.
  double normal();

  /// Uniform integer on [0, n), n >= 1.
  int uniform_int(int n);

  /// `count` distinct integers from [lo, hi] inclusive, ascending order.
  std::vector<int> sample_without_replacement(int lo, int hi, int count);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace sparselab
