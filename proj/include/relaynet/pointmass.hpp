#pragma once

#include "relaynet/env.hpp"

namespace relaynet {

struct PointMassParams {
  double mass = 1.0;
  double force_bound = 5.0;
  double action_scale = 2.0;
  double arena_half_width = 6.0;
  double goal_x = 0.0;
  double goal_y = 0.0;
  double reach_radius = 1.0;
  double max_speed = 10.0;
  double timestep = 0.002;
  int frame_skip = 5;
  double alive_bonus = 2.0;
  double control_cost = 0.001;

  friend bool operator==(const PointMassParams&, const PointMassParams&) = default;
};

/// Planar double integrator. State [px, py, vx, vy], action [fx, fy].
class PointMass final : public Environment {
 public:
  static constexpr const char* kOutsideArena = "outside_arena";
  static constexpr const char* kFarFromGoal = "far_from_goal";

  explicit PointMass(PointMassParams params = {});

  const EnvSpec& spec() const override { return spec_; }
  const PointMassParams& params() const noexcept { return params_; }

  void step(std::span<double> state, std::span<const double> action) const override;
  double reward(std::span<const double> state, std::span<const double> action) const override;
  double constraint(std::span<const double> state) const override;
  std::vector<std::string> failure_predicate_names() const override;
  bool failure(std::string_view predicate, std::span<const double> state) const override;
  FeatureMap features() const override;
  void project_feasible(std::span<double> state) const override;

  double distance_to_goal(std::span<const double> state) const;

 private:
  PointMassParams params_;
  EnvSpec spec_;
};

}  // namespace relaynet
