#include "modigw/random.hpp"

namespace modigw {

double uniform01(Rng& rng) {
  // 53 random mantissa bits; identical on every platform for a given engine.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t sample_discrete(std::span<const double> probs, Rng& rng) {
  const double u = uniform01(rng);
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last_positive = i;
    cumulative += probs[i];
    if (u < cumulative) return i;
  }
  return last_positive;
}

}  // namespace modigw
