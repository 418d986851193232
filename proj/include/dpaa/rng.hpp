#pragma once

#include <cstdint>
#include <random>

namespace dpaa {

// Deterministic RNG used everywhere in the library. mt19937_64 output is
// standardized, and the uniform/normal mappings below are hand-rolled so
// streams are bit-identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n), unbiased via rejection.
  std::int64_t bounded(std::int64_t n);

  // Standard normal via Box-Muller; keeps the spare draw.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// splitmix64 finalizer; decorrelates derived stream seeds.
std::uint64_t mix64(std::uint64_t x);

// Seed for an independent stream identified by (base, a, b), e.g. per-user
// samplers derived from (seed, user id).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace dpaa
