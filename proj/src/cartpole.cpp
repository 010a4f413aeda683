#include "relaynet/cartpole.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "relaynet/error.hpp"
#include "relaynet/tensor.hpp"

namespace relaynet {

CartPole::CartPole(CartPoleParams params) : params_(params) {
  require(params_.cart_mass > 0 && params_.pole_mass > 0 && params_.pole_length > 0 && params_.gravity >= 0,
          ErrorCode::InvalidArgument, "cartpole masses, length and gravity must be positive");
  require(params_.track_limit > 0, ErrorCode::InvalidArgument, "cartpole track limit must be positive");
  const double inf = std::numeric_limits<double>::infinity();
  spec_.name = "cartpole";
  spec_.state_size = 4;
  spec_.action_size = 1;
  spec_.action_bound = params_.force_bound;
  spec_.action_scale = params_.action_scale;
  spec_.timestep = params_.timestep;
  spec_.frame_skip = params_.frame_skip;
  spec_.alive_bonus = params_.alive_bonus;
  spec_.control_cost = params_.control_cost;
  spec_.box_low = {-std::numbers::pi, -params_.max_angular_velocity, -inf, -params_.max_cart_velocity};
  spec_.box_high = {std::numbers::pi, params_.max_angular_velocity, inf, params_.max_cart_velocity};
  spec_.periodic = {true, false, false, false};
  spec_.validate();
}

std::array<double, 2> CartPole::accelerations(std::span<const double> s, double force) const {
  const double m = params_.pole_mass;
  const double big_m = params_.cart_mass;
  const double l = params_.pole_length;
  const double g = params_.gravity;
  const double sin_t = std::sin(s[0]);
  const double cos_t = std::cos(s[0]);
  const double x_acc = (force + m * sin_t * (l * s[1] * s[1] - g * cos_t)) / (big_m + m * sin_t * sin_t);
  const double theta_acc = (g * sin_t - cos_t * x_acc) / l;
  return {theta_acc, x_acc};
}

double CartPole::energy(std::span<const double> s) const {
  const double m = params_.pole_mass;
  const double big_m = params_.cart_mass;
  const double l = params_.pole_length;
  const double kinetic = 0.5 * (big_m + m) * s[3] * s[3] + m * l * std::cos(s[0]) * s[3] * s[1] +
                         0.5 * m * l * l * s[1] * s[1];
  return kinetic + m * params_.gravity * l * std::cos(s[0]);
}

void CartPole::step(std::span<double> state, std::span<const double> action) const {
  require(state.size() == 4 && action.size() == 1, ErrorCode::Dimension, "cartpole state/action size");
  if (!all_finite(state)) fail(ErrorCode::Numeric, "non-finite cartpole state");
  const double force = std::clamp(action[0], -params_.force_bound, params_.force_bound);
  const double h = params_.timestep;
  using S = std::array<double, 4>;
  auto deriv = [&](const S& s) {
    const auto acc = accelerations(s, force);
    return S{s[1], acc[0], s[3], acc[1]};
  };
  S s{state[0], state[1], state[2], state[3]};
  for (int k = 0; k < params_.frame_skip; ++k) {
    const S k1 = deriv(s);
    S tmp;
    for (int i = 0; i < 4; ++i) tmp[i] = s[i] + 0.5 * h * k1[i];
    const S k2 = deriv(tmp);
    for (int i = 0; i < 4; ++i) tmp[i] = s[i] + 0.5 * h * k2[i];
    const S k3 = deriv(tmp);
    for (int i = 0; i < 4; ++i) tmp[i] = s[i] + h * k3[i];
    const S k4 = deriv(tmp);
    for (int i = 0; i < 4; ++i) s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  s[0] = wrap_angle(s[0]);
  if (!all_finite(s)) fail(ErrorCode::Numeric, "cartpole integration produced a non-finite state");
  std::copy(s.begin(), s.end(), state.begin());
}

double CartPole::reward(std::span<const double> state, std::span<const double> action) const {
  const double f = action[0];
  return std::cos(state[0]) - state[2] * state[2] - params_.control_cost * f * f + params_.alive_bonus;
}

double CartPole::constraint(std::span<const double> state) const {
  return params_.track_limit - std::abs(state[2]);
}

std::vector<std::string> CartPole::failure_predicate_names() const {
  return {kPoleBelowHorizontal, kCartOffTrack};
}

bool CartPole::failure(std::string_view predicate, std::span<const double> state) const {
  if (predicate == kPoleBelowHorizontal) return std::cos(state[0]) < 0.0;
  if (predicate == kCartOffTrack) return std::abs(state[2]) > params_.track_limit;
  fail(ErrorCode::InvalidArgument, "unknown cartpole failure predicate: " + std::string(predicate));
}

FeatureMap CartPole::features() const {
  using K = FeatureMap::Kind;
  return FeatureMap({{K::Angle, 1.0}, {K::Scaled, 0.2}, {K::Scaled, 0.5}, {K::Scaled, 0.3}});
}

void CartPole::project_feasible(std::span<double> state) const {
  canonicalize(state);
  state[2] = std::clamp(state[2], -params_.track_limit, params_.track_limit);
}

}  // namespace relaynet
