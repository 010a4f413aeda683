#include "relaynet/features.hpp"

#include <cmath>

#include "relaynet/error.hpp"

namespace relaynet {

FeatureMap::FeatureMap(std::vector<Dim> dims) : dims_(std::move(dims)) {
  for (const auto& d : dims_) feature_size_ += d.kind == Kind::Angle ? 2 : 1;
}

FeatureMap FeatureMap::identity(std::size_t n) { return FeatureMap(std::vector<Dim>(n)); }

void FeatureMap::apply(std::span<const double> state, std::span<double> features) const {
  require(state.size() == dims_.size(), ErrorCode::Dimension, "feature map state size mismatch");
  require(features.size() == feature_size_, ErrorCode::Dimension, "feature map output size mismatch");
  std::size_t k = 0;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (dims_[i].kind == Kind::Angle) {
      features[k++] = std::sin(state[i]);
      features[k++] = std::cos(state[i]);
    } else {
      features[k++] = dims_[i].scale * state[i];
    }
  }
}

std::vector<double> FeatureMap::apply(std::span<const double> state) const {
  std::vector<double> out(feature_size_);
  apply(state, out);
  return out;
}

void FeatureMap::pullback(std::span<const double> state, std::span<const double> grad_features,
                          std::span<double> grad_state) const {
  require(state.size() == dims_.size() && grad_state.size() == dims_.size() &&
              grad_features.size() == feature_size_,
          ErrorCode::Dimension, "feature map pullback size mismatch");
  std::size_t k = 0;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (dims_[i].kind == Kind::Angle) {
      grad_state[i] = grad_features[k] * std::cos(state[i]) - grad_features[k + 1] * std::sin(state[i]);
      k += 2;
    } else {
      grad_state[i] = grad_features[k++] * dims_[i].scale;
    }
  }
}

}  // namespace relaynet
