#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace modigw {

// Per-run pseudo random generator. Every simulation run owns exactly one.
using Rng = std::mt19937_64;

// Uniform draw on [0, 1).
double uniform01(Rng& rng);

// Inverse-CDF draw from a discrete distribution. Any mass left over by
// rounding goes to the last index with positive probability.
std::size_t sample_discrete(std::span<const double> probs, Rng& rng);

}  // namespace modigw
