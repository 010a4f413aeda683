#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace relaynet {

using Rng = std::mt19937_64;

/// Seed for a named subsystem stream. Streams with different labels are
/// independent, so adding a new consumer never perturbs existing ones.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);

inline Rng make_rng(std::uint64_t master, std::string_view label) {
  return Rng(derive_seed(master, label));
}

double standard_normal(Rng& rng);
double uniform01(Rng& rng);

}  // namespace relaynet
