#pragma once

#include <cstdint>
#include <random>

namespace tvol {

/// SplitMix64 finalizer (Steele, Lea & Flood). Bijective on 64-bit words.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed for path `path_index` of a run seeded with `master`:
///   splitmix64(master ^ splitmix64(path_index + 0x9E3779B97F4A7C15)).
/// Both stages are bijections, so for a fixed master distinct indices never
/// collide, and the result depends only on (master, index), not on which
/// worker simulates the path.
std::uint64_t derive_subseed(std::uint64_t master, std::uint64_t path_index);

/// Deterministic variate source on top of std::mt19937_64.
///
/// The transforms from raw 64-bit words are written out here rather than taken
/// from <random> distributions, whose algorithms differ between standard
/// library implementations; paths are therefore reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal (polar Box-Muller, spare value cached).
  double normal();
  /// Poisson with the given mean, by sequential inversion (large means are
  /// split into a sum of independent Poisson(<= 16) draws).
  std::uint64_t poisson(double mean);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace tvol
