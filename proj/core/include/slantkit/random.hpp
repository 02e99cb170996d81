#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace slantkit {

// 64-bit FNV-1a. Stable across platforms and runs, unlike std::hash.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis = 0xcbf29ce484222325ULL);

// Seed for a named pipeline stage, derived from the pipeline-wide seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage);

// Thin wrapper over mt19937_64 with distribution code written out so that
// sampled values are identical on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1].
  double uniform01_closed();
  // Uniform on [0, 1).
  double uniform01();
  // Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace slantkit
