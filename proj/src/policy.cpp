#include "relaynet/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "relaynet/error.hpp"

namespace relaynet {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2 pi)

std::vector<std::size_t> layer_sizes(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  std::vector<std::size_t> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

}  // namespace

ValueFunction ValueFunction::create(FeatureMap features, const std::vector<std::size_t>& hidden, Rng& rng) {
  ValueFunction vf;
  vf.net = MlpParams::zeros(layer_sizes(features.feature_size(), hidden, 1));
  vf.features = std::move(features);
  init_orthogonal(vf.net, rng, std::sqrt(2.0), 1.0);
  return vf;
}

void ValueFunction::validate() const {
  net.validate();
  require(net.output_size() == 1, ErrorCode::Dimension, "value network must have one output");
  require(net.input_size() == features.feature_size(), ErrorCode::Dimension,
          "value network input does not match feature map");
  require(std::isfinite(out_scale) && out_scale > 0 && std::isfinite(out_shift), ErrorCode::Numeric,
          "value output normalization must be finite with positive scale");
}

double ValueFunction::value(std::span<const double> state) const {
  ValueEvaluator eval(*this);
  return eval(state);
}

double ValueFunction::value_and_gradient(std::span<const double> state, std::span<double> grad_state) const {
  MlpTape tape(net);
  auto feats = features.apply(state);
  const double y = tape.forward(net, feats)[0];
  std::vector<double> grad_feats(feats.size());
  const double seed = out_scale;
  tape.backward(net, std::span<const double>(&seed, 1), nullptr, grad_feats);
  features.pullback(state, grad_feats, grad_state);
  return out_shift + out_scale * y;
}

ValueEvaluator::ValueEvaluator(const ValueFunction& vf)
    : vf_(&vf), tape_(vf.net), features_(vf.features.feature_size()) {}

double ValueEvaluator::operator()(std::span<const double> state) {
  return vf_->out_shift + vf_->out_scale * forward_normalized(state);
}

double ValueEvaluator::forward_normalized(std::span<const double> state) {
  vf_->features.apply(state, features_);
  return tape_.forward(vf_->net, features_)[0];
}

void ValueEvaluator::backward_normalized(double weight, MlpParams& grads) {
  tape_.backward(vf_->net, std::span<const double>(&weight, 1), &grads, {});
}

GaussianPolicy GaussianPolicy::create(FeatureMap features, const std::vector<std::size_t>& hidden,
                                      std::size_t action_size, Rng& rng, double action_scale) {
  require(action_scale > 0.0 && std::isfinite(action_scale), ErrorCode::InvalidArgument,
          "action scale must be positive");
  GaussianPolicy p;
  p.mean_net = MlpParams::zeros(layer_sizes(features.feature_size(), hidden, action_size));
  p.features = std::move(features);
  init_orthogonal(p.mean_net, rng, std::sqrt(2.0), 0.01);
  p.log_std.assign(action_size, 0.0);
  p.action_scale.assign(action_size, action_scale);
  return p;
}

std::vector<double> GaussianPolicy::effective_log_std() const {
  std::vector<double> out(log_std.size());
  for (std::size_t j = 0; j < log_std.size(); ++j) out[j] = log_std[j] + std::log(action_scale[j]);
  return out;
}

void GaussianPolicy::validate() const {
  mean_net.validate();
  require(mean_net.input_size() == features.feature_size(), ErrorCode::Dimension,
          "policy network input does not match feature map");
  require(mean_net.output_size() == log_std.size(), ErrorCode::Dimension,
          "policy output size does not match log_std length");
  require(action_scale.size() == log_std.size(), ErrorCode::Dimension,
          "policy action scale does not match log_std length");
  for (double s : action_scale)
    require(s > 0.0 && std::isfinite(s), ErrorCode::InvalidArgument, "action scale must be positive");
}

void GaussianPolicy::clamp_log_std() {
  for (auto& l : log_std) l = std::max(l, kLogStdFloor);
}

std::vector<double> GaussianPolicy::mean(std::span<const double> state) const {
  PolicyEvaluator eval(*this);
  auto m = eval.mean(state);
  return {m.begin(), m.end()};
}

double GaussianPolicy::log_prob(std::span<const double> state, std::span<const double> action) const {
  PolicyEvaluator eval(*this);
  return eval.log_prob(state, action, 0.0, nullptr);
}

double GaussianPolicy::entropy() const {
  double h = 0.0;
  for (double l : effective_log_std()) h += l + 0.5 + kHalfLog2Pi;
  return h;
}

std::vector<std::span<double>> GaussianPolicy::segments() {
  auto s = mean_net.segments();
  s.push_back(log_std);
  return s;
}

std::vector<std::span<const double>> GaussianPolicy::segments() const {
  auto s = mean_net.segments();
  s.push_back(log_std);
  return s;
}

PolicyGradient PolicyGradient::zeros_like(const GaussianPolicy& policy) {
  return {MlpParams::zeros(policy.mean_net.layer_sizes), std::vector<double>(policy.log_std.size(), 0.0)};
}

void PolicyGradient::set_zero() {
  mean_net.set_zero();
  std::fill(log_std.begin(), log_std.end(), 0.0);
}

std::vector<std::span<double>> PolicyGradient::segments() {
  auto s = mean_net.segments();
  s.push_back(log_std);
  return s;
}

std::vector<std::span<const double>> PolicyGradient::segments() const {
  auto s = mean_net.segments();
  s.push_back(log_std);
  return s;
}

double gaussian_log_prob(std::span<const double> mean, std::span<const double> log_std,
                         std::span<const double> action) {
  require(mean.size() == log_std.size() && action.size() == mean.size(), ErrorCode::Dimension,
          "gaussian log prob size mismatch");
  double lp = 0.0;
  for (std::size_t j = 0; j < mean.size(); ++j) {
    const double z = (action[j] - mean[j]) * std::exp(-log_std[j]);
    lp += -0.5 * z * z - log_std[j] - kHalfLog2Pi;
  }
  return lp;
}

PolicyEvaluator::PolicyEvaluator(const GaussianPolicy& policy)
    : policy_(&policy),
      tape_(policy.mean_net),
      features_(policy.features.feature_size()),
      mean_(policy.action_size()),
      log_std_(policy.effective_log_std()),
      out_grad_(policy.action_size()) {}

std::span<const double> PolicyEvaluator::mean(std::span<const double> state) {
  policy_->features.apply(state, features_);
  auto m = tape_.forward(policy_->mean_net, features_);
  for (std::size_t j = 0; j < m.size(); ++j) mean_[j] = policy_->action_scale[j] * m[j];
  return mean_;
}

ActionSample PolicyEvaluator::sample(std::span<const double> state, double action_bound, Rng& rng) {
  auto m = mean(state);
  ActionSample s;
  s.raw.resize(m.size());
  s.action.resize(m.size());
  for (std::size_t j = 0; j < m.size(); ++j) {
    s.raw[j] = m[j] + std::exp(log_std_[j]) * standard_normal(rng);
    s.action[j] = std::clamp(s.raw[j], -action_bound, action_bound);
  }
  s.log_prob = gaussian_log_prob(m, log_std_, s.raw);
  return s;
}

std::vector<double> PolicyEvaluator::act_deterministic(std::span<const double> state, double action_bound) {
  auto m = mean(state);
  std::vector<double> a(m.begin(), m.end());
  for (auto& v : a) v = std::clamp(v, -action_bound, action_bound);
  return a;
}

double PolicyEvaluator::log_prob_forward(std::span<const double> state, std::span<const double> action) {
  auto m = mean(state);
  for (double l : policy_->log_std)
    if (l < GaussianPolicy::kLogStdFloor) fail(ErrorCode::Numeric, "policy standard deviation below 1e-8 floor");
  return gaussian_log_prob(m, log_std_, action);
}

void PolicyEvaluator::log_prob_backward(std::span<const double> action, double weight, PolicyGradient& grads) {
  for (std::size_t j = 0; j < mean_.size(); ++j) {
    const double inv_var = std::exp(-2.0 * log_std_[j]);
    const double diff = action[j] - mean_[j];
    out_grad_[j] = weight * diff * inv_var * policy_->action_scale[j];
    grads.log_std[j] += weight * (diff * diff * inv_var - 1.0);
  }
  tape_.backward(policy_->mean_net, out_grad_, &grads.mean_net, {});
}

double PolicyEvaluator::log_prob(std::span<const double> state, std::span<const double> action,
                                 double weight, PolicyGradient* grads) {
  const double lp = log_prob_forward(state, action);
  if (grads) log_prob_backward(action, weight, *grads);
  return lp;
}

ActionSample sample_action(const GaussianPolicy& policy, std::span<const double> state,
                           double action_bound, Rng& rng) {
  PolicyEvaluator eval(policy);
  return eval.sample(state, action_bound, rng);
}

}  // namespace relaynet
