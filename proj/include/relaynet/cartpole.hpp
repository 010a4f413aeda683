#pragma once

#include <array>

#include "relaynet/env.hpp"

namespace relaynet {

struct CartPoleParams {
  double cart_mass = 1.0;
  double pole_mass = 0.1;
  double pole_length = 0.5;  // pivot to pole mass
  double gravity = 9.81;
  double force_bound = 40.0;
  double action_scale = 10.0;
  double track_limit = 3.0;
  double max_angular_velocity = 15.0;
  double max_cart_velocity = 10.0;
  double timestep = 0.002;
  int frame_skip = 5;
  double alive_bonus = 2.0;
  double control_cost = 0.01;

  friend bool operator==(const CartPoleParams&, const CartPoleParams&) = default;
};

/// Frictionless cart with a point-mass pole. State [theta, theta_dot, x, x_dot],
/// theta measured from upright and wrapped into (-pi, pi].
class CartPole final : public Environment {
 public:
  static constexpr const char* kPoleBelowHorizontal = "pole_below_horizontal";
  static constexpr const char* kCartOffTrack = "cart_off_track";

  explicit CartPole(CartPoleParams params = {});

  const EnvSpec& spec() const override { return spec_; }
  const CartPoleParams& params() const noexcept { return params_; }

  void step(std::span<double> state, std::span<const double> action) const override;
  double reward(std::span<const double> state, std::span<const double> action) const override;
  double constraint(std::span<const double> state) const override;
  std::vector<std::string> failure_predicate_names() const override;
  bool failure(std::string_view predicate, std::span<const double> state) const override;
  FeatureMap features() const override;
  void project_feasible(std::span<double> state) const override;

  /// (theta_ddot, x_ddot) for the given state and horizontal force.
  std::array<double, 2> accelerations(std::span<const double> state, double force) const;
  /// Kinetic plus potential energy (pivot height as zero potential).
  double energy(std::span<const double> state) const;

 private:
  CartPoleParams params_;
  EnvSpec spec_;
};

}  // namespace relaynet
