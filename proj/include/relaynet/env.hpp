#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relaynet/features.hpp"
#include "relaynet/rng.hpp"

namespace relaynet {

struct ValueFunction;

enum class TerminalCause { None, Failure, ValueThreshold, Timeout };

const char* to_string(TerminalCause cause);

/// N(mean, diag(variance)).
struct GaussianDist {
  std::vector<double> mean;
  std::vector<double> variance;

  std::size_t dim() const noexcept { return mean.size(); }
  void validate() const;

  friend bool operator==(const GaussianDist&, const GaussianDist&) = default;
};

/// Parent value predicate V(s) > threshold attached during chain construction.
struct ValueThreshold {
  std::shared_ptr<const ValueFunction> value_fn;
  double threshold = 0.0;
};

struct TerminationSet {
  int max_steps = 1;
  std::vector<std::string> failure_predicates;
  std::optional<ValueThreshold> value_threshold;
};

struct EnvSpec {
  std::string name;
  std::size_t state_size = 0;
  std::size_t action_size = 0;
  double action_bound = 1.0;
  double action_scale = 1.0;  // policy action unit
  double timestep = 0.002;
  int frame_skip = 5;
  double alive_bonus = 2.0;
  double control_cost = 0.0;
  std::vector<double> box_low;
  std::vector<double> box_high;
  std::vector<bool> periodic;

  double control_interval() const noexcept { return timestep * frame_skip; }
  void validate() const;
};

/// Stateless dynamics: the rollout owns the state vector, so one instance can
/// serve any number of concurrent rollouts.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual const EnvSpec& spec() const = 0;
  /// Advances `state` in place by one control step (frame_skip physics steps).
  virtual void step(std::span<double> state, std::span<const double> action) const = 0;
  virtual double reward(std::span<const double> state, std::span<const double> action) const = 0;
  /// C(s); feasible iff >= 0.
  virtual double constraint(std::span<const double> state) const = 0;
  virtual std::vector<std::string> failure_predicate_names() const = 0;
  /// Throws for unknown predicate names.
  virtual bool failure(std::string_view predicate, std::span<const double> state) const = 0;
  virtual FeatureMap features() const = 0;
  /// Canonicalizes and then pulls the state back inside C(s) >= 0.
  virtual void project_feasible(std::span<double> state) const;

  /// Wraps periodic coordinates into (-pi, pi] and clamps to the validity box.
  void canonicalize(std::span<double> state) const;
  /// a - b with periodic coordinates wrapped into (-pi, pi].
  std::vector<double> difference(std::span<const double> a, std::span<const double> b) const;
  double squared_distance(std::span<const double> a, std::span<const double> b) const;
};

double wrap_angle(double angle);

/// Precedence: failure > value threshold > timeout. `step_count` is the number
/// of control steps taken so far.
TerminalCause check_termination(const Environment& env, const TerminationSet& set,
                                std::span<const double> state, int step_count);

/// Draws from N(mean, inflation * variance), canonicalizes, and rejects
/// samples violating C(s) >= 0 (at most 100 attempts).
std::vector<double> sample_initial(const Environment& env, const GaussianDist& dist, double inflation, Rng& rng);

inline constexpr int kMaxInitialRejections = 100;

}  // namespace relaynet
