#pragma once

#include <cstdint>

namespace oracles {

struct GradientCheck {
  int nets = 0;
  double max_relative_error = 0.0;
};

/// Parameter and input gradients of random tanh nets against central
/// differences.
GradientCheck finite_difference_check(int nets, std::uint64_t seed);

struct GaeCheck {
  int sequences = 0;
  double max_abs_error = 0.0;
};

/// GAE with lambda = 1 and zero values against direct discounted sums.
GaeCheck gae_bruteforce_check(int sequences, std::uint64_t seed);

struct StumpCheck {
  int datasets = 0;
  int mismatches = 0;
};

/// stump_fit error counts against an exhaustive scan of candidate cuts.
StumpCheck stump_bruteforce_check(int datasets, std::uint64_t seed);

}  // namespace oracles
