#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "relaynet/mlp.hpp"

namespace relaynet {

struct AdamConfig {
  double step_size = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment accumulators for a fixed list of parameter segments.
class AdamState {
 public:
  AdamState() = default;
  AdamState(std::vector<std::size_t> segment_sizes, AdamConfig config);

  static AdamState for_params(const MlpParams& params, AdamConfig config);

  /// Rejects the whole update (throws, parameters untouched) if any gradient
  /// is non-finite or the segment layout differs from construction.
  void step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads);

  std::uint64_t steps() const noexcept { return steps_; }
  const AdamConfig& config() const noexcept { return config_; }
  void set_step_size(double step_size) { config_.step_size = step_size; }
  std::span<const double> first_moment() const noexcept { return m_; }
  std::span<const double> second_moment() const noexcept { return v_; }

 private:
  AdamConfig config_;
  std::vector<std::size_t> sizes_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::uint64_t steps_ = 0;
};

void adam_step(AdamState& state, MlpParams& params, const MlpParams& grads);

}  // namespace relaynet
