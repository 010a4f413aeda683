#include "relaynet/adam.hpp"

#include <cmath>
#include <numeric>

#include "relaynet/error.hpp"

namespace relaynet {

AdamState::AdamState(std::vector<std::size_t> segment_sizes, AdamConfig config)
    : config_(config), sizes_(std::move(segment_sizes)) {
  const auto total = std::accumulate(sizes_.begin(), sizes_.end(), std::size_t{0});
  m_.assign(total, 0.0);
  v_.assign(total, 0.0);
}

AdamState AdamState::for_params(const MlpParams& params, AdamConfig config) {
  std::vector<std::size_t> sizes;
  for (auto s : params.segments()) sizes.push_back(s.size());
  return AdamState(std::move(sizes), config);
}

void AdamState::step(std::span<const std::span<double>> params,
                     std::span<const std::span<const double>> grads) {
  require(params.size() == sizes_.size() && grads.size() == sizes_.size(), ErrorCode::Dimension,
          "adam segment count mismatch");
  for (std::size_t s = 0; s < sizes_.size(); ++s) {
    require(params[s].size() == sizes_[s] && grads[s].size() == sizes_[s], ErrorCode::Dimension,
            "adam segment size mismatch");
    if (!all_finite(grads[s])) fail(ErrorCode::Numeric, "non-finite gradient rejected by adam");
  }
  ++steps_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  std::size_t k = 0;
  for (std::size_t s = 0; s < sizes_.size(); ++s) {
    auto p = params[s];
    auto g = grads[s];
    for (std::size_t i = 0; i < p.size(); ++i, ++k) {
      m_[k] = b1 * m_[k] + (1.0 - b1) * g[i];
      v_[k] = b2 * v_[k] + (1.0 - b2) * g[i] * g[i];
      const double mhat = m_[k] / c1;
      const double vhat = v_[k] / c2;
      p[i] -= config_.step_size * mhat / (std::sqrt(vhat) + config_.epsilon);
    }
  }
}

void adam_step(AdamState& state, MlpParams& params, const MlpParams& grads) {
  auto p = params.segments();
  auto g = grads.segments();
  state.step(p, g);
}

}  // namespace relaynet
