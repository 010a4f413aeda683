#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "relaynet/features.hpp"
#include "relaynet/mlp.hpp"
#include "relaynet/rng.hpp"

namespace relaynet {

/// Scalar state-value network. The network regresses normalized returns;
/// value(s) = out_shift + out_scale * net(features(s)).
struct ValueFunction {
  FeatureMap features;
  MlpParams net;
  double out_scale = 1.0;
  double out_shift = 0.0;

  static ValueFunction create(FeatureMap features, const std::vector<std::size_t>& hidden, Rng& rng);

  double value(std::span<const double> state) const;
  /// Returns V(s) and writes dV/ds.
  double value_and_gradient(std::span<const double> state, std::span<double> grad_state) const;

  void validate() const;

  friend bool operator==(const ValueFunction&, const ValueFunction&) = default;
};

/// Holds scratch buffers so repeated evaluations do not allocate.
class ValueEvaluator {
 public:
  explicit ValueEvaluator(const ValueFunction& vf);
  double operator()(std::span<const double> state);
  /// Normalized network output (before scale/shift) for the last state, plus
  /// accumulation of d(net)/d(params) * weight into `grads`.
  double forward_normalized(std::span<const double> state);
  void backward_normalized(double weight, MlpParams& grads);
  const ValueFunction& function() const noexcept { return *vf_; }

 private:
  const ValueFunction* vf_;
  MlpTape tape_;
  std::vector<double> features_;
};

/// Diagonal Gaussian policy: MLP mean plus state-independent log std.
/// `action_scale` is a fixed per-dimension unit: the physical mean is
/// action_scale * net(s) and the physical std is action_scale * exp(log_std).
struct GaussianPolicy {
  static constexpr double kLogStdFloor = -18.420680743952367;  // ln(1e-8)

  FeatureMap features;
  MlpParams mean_net;
  std::vector<double> log_std;
  std::vector<double> action_scale;

  static GaussianPolicy create(FeatureMap features, const std::vector<std::size_t>& hidden,
                               std::size_t action_size, Rng& rng, double action_scale = 1.0);

  /// log_std + ln(action_scale): log of the physical standard deviation.
  std::vector<double> effective_log_std() const;

  std::size_t action_size() const noexcept { return log_std.size(); }
  std::vector<double> mean(std::span<const double> state) const;
  double log_prob(std::span<const double> state, std::span<const double> action) const;
  double entropy() const;

  void validate() const;
  void clamp_log_std();

  std::vector<std::span<double>> segments();
  std::vector<std::span<const double>> segments() const;

  friend bool operator==(const GaussianPolicy&, const GaussianPolicy&) = default;
};

struct PolicyGradient {
  MlpParams mean_net;
  std::vector<double> log_std;

  static PolicyGradient zeros_like(const GaussianPolicy& policy);
  void set_zero();
  std::vector<std::span<double>> segments();
  std::vector<std::span<const double>> segments() const;
};

struct ActionSample {
  std::vector<double> raw;     // unclamped Gaussian draw; log_prob refers to this
  std::vector<double> action;  // clamped to the action box, what the environment sees
  double log_prob = 0.0;
};

double gaussian_log_prob(std::span<const double> mean, std::span<const double> log_std,
                         std::span<const double> action);

class PolicyEvaluator {
 public:
  explicit PolicyEvaluator(const GaussianPolicy& policy);

  std::span<const double> mean(std::span<const double> state);
  ActionSample sample(std::span<const double> state, double action_bound, Rng& rng);
  /// Deterministic mode: the clamped mean.
  std::vector<double> act_deterministic(std::span<const double> state, double action_bound);

  /// log pi(a|s); when `grads` is non-null adds weight * d log pi / d params.
  double log_prob(std::span<const double> state, std::span<const double> action, double weight,
                  PolicyGradient* grads);

  /// Split form of log_prob for callers that pick the weight from the value:
  /// backward() applies to the most recent forward().
  double log_prob_forward(std::span<const double> state, std::span<const double> action);
  void log_prob_backward(std::span<const double> action, double weight, PolicyGradient& grads);

 private:
  const GaussianPolicy* policy_;
  MlpTape tape_;
  std::vector<double> features_;
  std::vector<double> mean_;
  std::vector<double> log_std_;
  std::vector<double> out_grad_;
};

ActionSample sample_action(const GaussianPolicy& policy, std::span<const double> state,
                           double action_bound, Rng& rng);

}  // namespace relaynet
