#include "relaynet/pointmass.hpp"

#include <algorithm>
#include <cmath>

#include "relaynet/error.hpp"
#include "relaynet/tensor.hpp"

namespace relaynet {

PointMass::PointMass(PointMassParams params) : params_(params) {
  require(params_.mass > 0 && params_.arena_half_width > 0 && params_.reach_radius > 0,
          ErrorCode::InvalidArgument, "point mass parameters must be positive");
  const double a = params_.arena_half_width;
  const double v = params_.max_speed;
  spec_.name = "pointmass";
  spec_.state_size = 4;
  spec_.action_size = 2;
  spec_.action_bound = params_.force_bound;
  spec_.action_scale = params_.action_scale;
  spec_.timestep = params_.timestep;
  spec_.frame_skip = params_.frame_skip;
  spec_.alive_bonus = params_.alive_bonus;
  spec_.control_cost = params_.control_cost;
  spec_.box_low = {-2 * a, -2 * a, -v, -v};
  spec_.box_high = {2 * a, 2 * a, v, v};
  spec_.periodic = {false, false, false, false};
  spec_.validate();
}

void PointMass::step(std::span<double> state, std::span<const double> action) const {
  require(state.size() == 4 && action.size() == 2, ErrorCode::Dimension, "point mass state/action size");
  if (!all_finite(state)) fail(ErrorCode::Numeric, "non-finite point mass state");
  const double bound = params_.force_bound;
  const double ax = std::clamp(action[0], -bound, bound) / params_.mass;
  const double ay = std::clamp(action[1], -bound, bound) / params_.mass;
  const double h = params_.timestep;
  // Constant force over each physics step: closed-form double integrator.
  for (int k = 0; k < params_.frame_skip; ++k) {
    state[0] += state[2] * h + 0.5 * ax * h * h;
    state[1] += state[3] * h + 0.5 * ay * h * h;
    state[2] += ax * h;
    state[3] += ay * h;
  }
}

double PointMass::distance_to_goal(std::span<const double> s) const {
  return std::hypot(s[0] - params_.goal_x, s[1] - params_.goal_y);
}

double PointMass::reward(std::span<const double> state, std::span<const double> action) const {
  const double a2 = action[0] * action[0] + action[1] * action[1];
  return -distance_to_goal(state) - params_.control_cost * a2 + params_.alive_bonus;
}

double PointMass::constraint(std::span<const double> state) const {
  return params_.arena_half_width - std::max(std::abs(state[0]), std::abs(state[1]));
}

std::vector<std::string> PointMass::failure_predicate_names() const { return {kOutsideArena, kFarFromGoal}; }

bool PointMass::failure(std::string_view predicate, std::span<const double> state) const {
  if (predicate == kOutsideArena) return constraint(state) < 0.0;
  if (predicate == kFarFromGoal) return distance_to_goal(state) > params_.reach_radius;
  fail(ErrorCode::InvalidArgument, "unknown point mass failure predicate: " + std::string(predicate));
}

FeatureMap PointMass::features() const {
  using K = FeatureMap::Kind;
  const double p = 1.0 / params_.arena_half_width;
  return FeatureMap({{K::Scaled, p}, {K::Scaled, p}, {K::Scaled, 0.3}, {K::Scaled, 0.3}});
}

void PointMass::project_feasible(std::span<double> state) const {
  canonicalize(state);
  const double a = params_.arena_half_width;
  state[0] = std::clamp(state[0], -a, a);
  state[1] = std::clamp(state[1], -a, a);
}

}  // namespace relaynet
