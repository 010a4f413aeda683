#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "relaynet/adam.hpp"
#include "relaynet/env.hpp"
#include "relaynet/policy.hpp"

namespace relaynet {

/// Plain discounted return.
struct RootObjective {};

/// Discounted return plus alpha * gamma^t_f * V_parent(s_t_f) when the rollout
/// ends by entering the parent's good region.
struct RelayObjective {
  std::shared_ptr<const ValueFunction> parent_value;
  double parent_threshold = 0.0;
  double alpha = 30.0;
};

using Objective = std::variant<RootObjective, RelayObjective>;

struct SubtaskSpec {
  std::shared_ptr<const Environment> env;
  GaussianDist rho;
  TerminationSet termination;
  Objective objective = RootObjective{};
  double gamma = 0.99;

  bool is_relay() const noexcept { return std::holds_alternative<RelayObjective>(objective); }
  void validate() const;
};

struct Transition {
  std::vector<double> state;
  std::vector<double> action;  // raw Gaussian sample; the environment saw it clamped
  std::vector<double> next_state;
  double reward = 0.0;
  double log_prob = 0.0;
  double value = 0.0;
  TerminalCause cause = TerminalCause::None;
};

struct Trajectory {
  std::vector<Transition> transitions;
  TerminalCause cause = TerminalCause::None;
  double bootstrap_value = 0.0;  // V(s_T) on timeout, 0 otherwise
  double terminal_bonus = 0.0;   // alpha * V_parent(s_t_f) on value-threshold termination
  double relay_bonus = 0.0;      // terminal_bonus * gamma^t_f

  std::size_t length() const noexcept { return transitions.size(); }
  double undiscounted_return() const;
  /// sum_t gamma^t r_t + relay_bonus.
  double discounted_objective(double gamma) const;
};

/// Runs one episode from `start` under `spec`. Deterministic mode uses the
/// clamped policy mean; the value network fills Transition::value.
Trajectory rollout(const SubtaskSpec& spec, const GaussianPolicy& policy, const ValueFunction* vf,
                   std::vector<double> start, bool deterministic, Rng& rng);

/// Resets from rho (no inflation) until at least `batch_steps` transitions
/// are collected; the last episode always runs to termination.
std::vector<Trajectory> collect_rollouts(const SubtaskSpec& spec, const GaussianPolicy& policy,
                                         const ValueFunction& vf, long batch_steps, Rng& rng);

struct Advantages {
  std::vector<double> advantages;
  std::vector<double> targets;
};

/// GAE from the values stored in the trajectory. The relay bonus enters as
/// gamma * terminal_bonus added to the final reward.
Advantages compute_gae(const Trajectory& trajectory, double gamma, double lambda);
/// Same, recomputing V(s_t) and the timeout bootstrap with `vf`.
Advantages compute_gae(const Trajectory& trajectory, const ValueFunction& vf, double gamma, double lambda);

struct PpoConfig {
  double gamma = 0.99;
  double lambda = 0.95;
  double clip = 0.2;
  int epochs = 10;
  std::size_t minibatch = 256;
  long batch_steps = 4096;
  double step_size = 3e-4;
  double value_step_size = 1e-3;
  double entropy_coef = 0.0;
  double max_grad_norm = 0.5;
  double kl_cap = 0.05;
};

struct PpoBatch {
  std::size_t state_size = 0;
  std::size_t action_size = 0;
  std::vector<double> states;   // row-major [n, state_size]
  std::vector<double> actions;  // row-major [n, action_size]
  std::vector<double> old_log_prob;
  std::vector<double> advantage;
  std::vector<double> value_target;

  std::size_t size() const noexcept { return old_log_prob.size(); }
  void append(std::span<const double> state, std::span<const double> action, double log_prob,
              double advantage, double target);
};

/// Standardizes advantages in place (zero mean, unit variance).
void normalize_advantages(PpoBatch& batch);

/// d surrogate / d log pi for one sample: ratio * A when the unclipped term
/// is the active minimum, 0 when the clip gate is closed.
double clipped_surrogate_weight(double ratio, double advantage, double clip);

struct PpoDiagnostics {
  int epochs_run = 0;
  bool kl_early_stop = false;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  std::vector<double> value_loss;  // per epoch, mean over minibatches
};

struct PpoOptimizers {
  AdamState policy;
  AdamState value;
};

PpoOptimizers make_optimizers(const GaussianPolicy& policy, const ValueFunction& vf, const PpoConfig& config);

PpoDiagnostics ppo_update(GaussianPolicy& policy, ValueFunction& vf, PpoOptimizers& optimizers,
                          const PpoBatch& batch, const PpoConfig& config, Rng& rng);

struct NetworkConfig {
  std::vector<std::size_t> policy_hidden{32, 32};
  std::vector<std::size_t> value_hidden{32, 32};
};

struct EvalOutcome {
  double success_rate = 0.0;
  double mean_return = 0.0;
  bool success = false;
};

using SuccessCriterion = std::function<EvalOutcome(const GaussianPolicy&, const ValueFunction&)>;

struct IterationInfo {
  int iteration = 0;
  long samples = 0;
  const GaussianPolicy* policy = nullptr;
  const ValueFunction* value = nullptr;
};

using IterationObserver = std::function<void(const IterationInfo&)>;

struct SearchConfig {
  PpoConfig ppo;
  NetworkConfig network;
  int confirm_iterations = 5;
  /// Success is evaluated every `eval_every` iterations and after the last one.
  int eval_every = 1;
};

struct PolicySearchReport {
  int iterations = 0;
  std::vector<double> mean_return;
  std::vector<double> mean_objective;
  std::vector<EvalOutcome> evaluations;
  long sample_count = 0;
  bool succeeded = false;
  int best_iteration = 0;
};

struct WarmStart {
  GaussianPolicy policy;
  ValueFunction value;
};

struct PolicySearchResult {
  GaussianPolicy policy;
  ValueFunction value;
  PolicySearchReport report;
};

/// collect -> GAE -> PPO until the budget is spent or the success criterion
/// holds `confirm_iterations` times in a row. Returns the best evaluated
/// snapshot.
PolicySearchResult policy_search(const SubtaskSpec& spec, const std::optional<WarmStart>& warm_start, long budget,
                                 const SuccessCriterion& success, const SearchConfig& config,
                                 std::uint64_t seed, const IterationObserver& observer = {});

}  // namespace relaynet
