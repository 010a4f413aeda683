#include "relaynet/env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "relaynet/error.hpp"
#include "relaynet/policy.hpp"

namespace relaynet {

const char* to_string(TerminalCause cause) {
  switch (cause) {
    case TerminalCause::None: return "none";
    case TerminalCause::Failure: return "failure";
    case TerminalCause::ValueThreshold: return "value_threshold";
    case TerminalCause::Timeout: return "timeout";
  }
  return "none";
}

void GaussianDist::validate() const {
  require(!mean.empty(), ErrorCode::InvalidArgument, "gaussian distribution has no dimensions");
  require(mean.size() == variance.size(), ErrorCode::Dimension, "gaussian mean/variance size mismatch");
  for (std::size_t i = 0; i < mean.size(); ++i) {
    require(std::isfinite(mean[i]) && std::isfinite(variance[i]), ErrorCode::Numeric,
            "gaussian parameters must be finite");
    require(variance[i] >= 0.0, ErrorCode::InvalidArgument, "gaussian variance must be non-negative");
  }
}

void EnvSpec::validate() const {
  require(timestep > 0.0, ErrorCode::InvalidArgument, "timestep must be positive");
  require(frame_skip >= 1, ErrorCode::InvalidArgument, "frame_skip must be at least 1");
  require(std::isfinite(action_bound) && action_bound > 0, ErrorCode::InvalidArgument,
          "action bound must be finite and positive");
  require(std::isfinite(action_scale) && action_scale > 0, ErrorCode::InvalidArgument,
          "action scale must be finite and positive");
  require(box_low.size() == state_size && box_high.size() == state_size && periodic.size() == state_size,
          ErrorCode::Dimension, "state box does not match state size");
}

double wrap_angle(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (angle > -std::numbers::pi && angle <= std::numbers::pi) return angle;
  double a = std::fmod(angle + std::numbers::pi, two_pi);
  if (a <= 0.0) a += two_pi;
  return a - std::numbers::pi;
}

void Environment::canonicalize(std::span<double> state) const {
  const auto& s = spec();
  require(state.size() == s.state_size, ErrorCode::Dimension, "state size mismatch");
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (s.periodic[i])
      state[i] = wrap_angle(state[i]);
    else
      state[i] = std::clamp(state[i], s.box_low[i], s.box_high[i]);
  }
}

void Environment::project_feasible(std::span<double> state) const { canonicalize(state); }

std::vector<double> Environment::difference(std::span<const double> a, std::span<const double> b) const {
  const auto& s = spec();
  require(a.size() == s.state_size && b.size() == s.state_size, ErrorCode::Dimension,
          "state size mismatch in difference");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = s.periodic[i] ? wrap_angle(a[i] - b[i]) : a[i] - b[i];
  return d;
}

double Environment::squared_distance(std::span<const double> a, std::span<const double> b) const {
  double acc = 0.0;
  for (double v : difference(a, b)) acc += v * v;
  return acc;
}

TerminalCause check_termination(const Environment& env, const TerminationSet& set,
                                std::span<const double> state, int step_count) {
  for (const auto& name : set.failure_predicates)
    if (env.failure(name, state)) return TerminalCause::Failure;
  if (set.value_threshold) {
    if (!set.value_threshold->value_fn)
      fail(ErrorCode::MissingValueFunction, "termination set has a value threshold but no value function");
    if (set.value_threshold->value_fn->value(state) > set.value_threshold->threshold)
      return TerminalCause::ValueThreshold;
  }
  if (step_count >= set.max_steps) return TerminalCause::Timeout;
  return TerminalCause::None;
}

std::vector<double> sample_initial(const Environment& env, const GaussianDist& dist, double inflation, Rng& rng) {
  dist.validate();
  require(inflation > 0.0, ErrorCode::InvalidArgument, "inflation must be positive");
  require(dist.dim() == env.spec().state_size, ErrorCode::Dimension,
          "distribution dimension does not match the state");
  std::vector<double> s(dist.dim());
  for (int attempt = 0; attempt < kMaxInitialRejections; ++attempt) {
    for (std::size_t i = 0; i < s.size(); ++i)
      s[i] = dist.mean[i] + std::sqrt(inflation * dist.variance[i]) * standard_normal(rng);
    env.canonicalize(s);
    if (env.constraint(s) >= 0.0) return s;
  }
  fail(ErrorCode::InfeasibleDistribution,
       "initial-state distribution violated C(s) >= 0 on 100 consecutive draws");
}

}  // namespace relaynet
