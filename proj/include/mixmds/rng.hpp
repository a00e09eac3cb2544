#pragma once

#include <cstdint>
#include <random>

namespace mixmds {

// One splitmix64 step; also used to spread a root seed into per-stream seeds.
std::uint64_t splitmix64(std::uint64_t& state);

// Seed for logical stream `stream` derived from `root`. Streams 1..K are the
// per-chain seeds; larger fixed tags are reserved for pipeline stages.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream);

// Random number generator with self-contained samplers on top of mt19937_64,
// so draws are identical across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // strictly inside (0, 1)
  double uniform();

  // standard normal via the Marsaglia polar method (no cached spare)
  double normal();
  double normal(double mean, double sd);

  // Gamma(shape, rate) via Marsaglia-Tsang; shape < 1 boosted through
  // Gamma(shape + 1) and a uniform power.
  double gamma(double shape, double rate);

  // Inv-Gamma(shape, scale) as the reciprocal of a Gamma(shape, rate=scale).
  double inv_gamma(double shape, double scale);

 private:
  std::mt19937_64 engine_;
};

}  // namespace mixmds
