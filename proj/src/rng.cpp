#include "mixmds/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace mixmds {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
  // Walk the splitmix64 stream `stream + 1` steps from the root. Cheap for the
  // small stream indices used here and keeps the rule trivial to document.
  std::uint64_t state = root;
  std::uint64_t out = splitmix64(state);
  for (std::uint64_t k = 0; k < stream; ++k) out = splitmix64(state);
  return out;
}

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() {
  // 53 random bits, offset by half an ulp so 0 and 1 are unreachable.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
  for (;;) {
    const double u = 2.0 * uniform() - 1.0;
    const double v = 2.0 * uniform() - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) {
      return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }
}

double Rng::normal(double mean, double sd) { return mean + sd * normal(); }

double Rng::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) {
    throw std::invalid_argument("Rng::gamma: shape and rate must be positive");
  }
  if (shape < 1.0) {
    const double u = uniform();
    return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v / rate;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

double Rng::inv_gamma(double shape, double scale) {
  return 1.0 / gamma(shape, scale);
}

}  // namespace mixmds
