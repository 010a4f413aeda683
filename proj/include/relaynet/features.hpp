#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace relaynet {

/// Fixed state -> network-input transform. Angular dimensions become
/// (sin, cos) so value and policy networks are continuous across the wrap;
/// everything else gets a constant per-dimension scale.
class FeatureMap {
 public:
  enum class Kind { Scaled, Angle };
  struct Dim {
    Kind kind = Kind::Scaled;
    double scale = 1.0;
    friend bool operator==(const Dim&, const Dim&) = default;
  };

  FeatureMap() = default;
  explicit FeatureMap(std::vector<Dim> dims);
  static FeatureMap identity(std::size_t n);

  std::size_t state_size() const noexcept { return dims_.size(); }
  std::size_t feature_size() const noexcept { return feature_size_; }
  const std::vector<Dim>& dims() const noexcept { return dims_; }

  void apply(std::span<const double> state, std::span<double> features) const;
  std::vector<double> apply(std::span<const double> state) const;

  /// grad_state = J^T grad_features, J the Jacobian of apply() at `state`.
  void pullback(std::span<const double> state, std::span<const double> grad_features,
                std::span<double> grad_state) const;

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  std::vector<Dim> dims_;
  std::size_t feature_size_ = 0;
};

}  // namespace relaynet
