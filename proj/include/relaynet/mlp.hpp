#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "relaynet/rng.hpp"
#include "relaynet/tensor.hpp"

namespace relaynet {

/// Fully connected network: tanh on hidden layers, identity on the output.
/// Layer l maps layer_sizes[l] -> layer_sizes[l+1]; weights are [out, in].
struct MlpParams {
  std::vector<std::size_t> layer_sizes;
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;

  static MlpParams zeros(std::vector<std::size_t> layer_sizes);

  std::size_t num_layers() const noexcept { return weights.size(); }
  std::size_t input_size() const { return layer_sizes.front(); }
  std::size_t output_size() const { return layer_sizes.back(); }
  std::size_t parameter_count() const;
  std::vector<std::size_t> hidden_sizes() const;

  /// Throws a dimension error if the tensors disagree with layer_sizes.
  void validate() const;

  /// Weights then bias for each layer, in order. Used by the optimizer and
  /// by serialization.
  std::vector<std::span<double>> segments();
  std::vector<std::span<const double>> segments() const;

  void set_zero();

  friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

/// Scaled orthogonal initialization; biases start at zero.
void init_orthogonal(MlpParams& params, Rng& rng, double hidden_gain, double output_gain);

/// Rank-1 input gives a rank-1 output; rank-2 input is a batch of rows.
Tensor mlp_forward(const MlpParams& params, const Tensor& input);

struct MlpGradients {
  MlpParams params;  // same shapes as the network
  Tensor input;
};

/// Gradients of sum(output * output_grad) with respect to the parameters and
/// the input. Batched inputs accumulate parameter gradients over rows.
MlpGradients backprop(const MlpParams& params, const Tensor& input, const Tensor& output_grad);

/// Reusable single-sample buffers for the training hot path.
class MlpTape {
 public:
  explicit MlpTape(const MlpParams& params);

  std::span<const double> forward(const MlpParams& params, std::span<const double> input);

  /// Backward pass for the most recent forward(). Adds parameter gradients
  /// into `grads` when non-null and writes the input gradient when
  /// `input_grad` is non-empty.
  void backward(const MlpParams& params, std::span<const double> output_grad, MlpParams* grads,
                std::span<double> input_grad);

 private:
  std::vector<std::vector<double>> activations_;
  std::vector<std::vector<double>> deltas_;
};

}  // namespace relaynet
