#include "relaynet/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "relaynet/error.hpp"

namespace relaynet {

void SubtaskSpec::validate() const {
  require(env != nullptr, ErrorCode::InvalidArgument, "subtask has no environment");
  rho.validate();
  require(rho.dim() == env->spec().state_size, ErrorCode::Dimension, "rho dimension does not match the state");
  require(termination.max_steps >= 1, ErrorCode::InvalidArgument, "max_steps must be at least 1");
  require(gamma > 0.0 && gamma < 1.0, ErrorCode::InvalidArgument, "gamma must lie in (0, 1)");
  if (const auto* relay = std::get_if<RelayObjective>(&objective)) {
    require(relay->parent_value != nullptr, ErrorCode::MissingValueFunction, "relay objective has no parent value");
    require(std::isfinite(relay->parent_threshold), ErrorCode::Numeric, "relay threshold must be finite");
    require(relay->alpha >= 0.0 && std::isfinite(relay->alpha), ErrorCode::InvalidArgument,
            "relay alpha must be non-negative");
  }
}

double Trajectory::undiscounted_return() const {
  double r = 0.0;
  for (const auto& t : transitions) r += t.reward;
  return r;
}

double Trajectory::discounted_objective(double gamma) const {
  double r = 0.0;
  double g = 1.0;
  for (const auto& t : transitions) {
    r += g * t.reward;
    g *= gamma;
  }
  return r + relay_bonus;
}

Trajectory rollout(const SubtaskSpec& spec, const GaussianPolicy& policy, const ValueFunction* vf,
                   std::vector<double> start, bool deterministic, Rng& rng) {
  const auto& env = *spec.env;
  const double bound = env.spec().action_bound;
  PolicyEvaluator pi(policy);
  std::optional<ValueEvaluator> value;
  if (vf) value.emplace(*vf);
  std::optional<ValueEvaluator> parent;
  const auto* relay = std::get_if<RelayObjective>(&spec.objective);
  if (relay) parent.emplace(*relay->parent_value);

  Trajectory traj;
  std::vector<double> state = std::move(start);
  for (int t = 0;; ++t) {
    Transition tr;
    tr.state = state;
    std::vector<double> applied;
    if (deterministic) {
      applied = pi.act_deterministic(state, bound);
      tr.action = applied;
      tr.log_prob = 0.0;
    } else {
      auto a = pi.sample(state, bound, rng);
      tr.action = std::move(a.raw);
      tr.log_prob = a.log_prob;
      applied = std::move(a.action);
    }
    tr.value = value ? (*value)(state) : 0.0;
    tr.reward = env.reward(state, applied);
    env.step(state, applied);
    tr.next_state = state;
    tr.cause = check_termination(env, spec.termination, state, t + 1);
    if (!std::isfinite(tr.reward)) fail(ErrorCode::Numeric, "non-finite reward");
    const auto cause = tr.cause;
    traj.transitions.push_back(std::move(tr));
    if (cause == TerminalCause::None) continue;
    traj.cause = cause;
    if (cause == TerminalCause::Timeout && value) traj.bootstrap_value = (*value)(state);
    if (cause == TerminalCause::ValueThreshold && relay) {
      traj.terminal_bonus = relay->alpha * (*parent)(state);
      traj.relay_bonus = traj.terminal_bonus * std::pow(spec.gamma, static_cast<double>(traj.length()));
    }
    break;
  }
  return traj;
}

std::vector<Trajectory> collect_rollouts(const SubtaskSpec& spec, const GaussianPolicy& policy,
                                         const ValueFunction& vf, long batch_steps, Rng& rng) {
  spec.validate();
  require(batch_steps >= spec.termination.max_steps, ErrorCode::InvalidArgument,
          "batch size must cover at least one full horizon");
  std::vector<Trajectory> out;
  long steps = 0;
  while (steps < batch_steps) {
    auto start = sample_initial(*spec.env, spec.rho, 1.0, rng);
    out.push_back(rollout(spec, policy, &vf, std::move(start), false, rng));
    steps += static_cast<long>(out.back().length());
  }
  return out;
}

Advantages compute_gae(const Trajectory& trajectory, double gamma, double lambda) {
  require(lambda >= 0.0 && lambda <= 1.0, ErrorCode::InvalidArgument, "lambda must lie in [0, 1]");
  const std::size_t n = trajectory.length();
  Advantages out;
  out.advantages.assign(n, 0.0);
  out.targets.assign(n, 0.0);
  double next_value = trajectory.bootstrap_value;
  double running = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const auto& tr = trajectory.transitions[i];
    double reward = tr.reward;
    if (i + 1 == n && trajectory.cause == TerminalCause::ValueThreshold)
      reward += gamma * trajectory.terminal_bonus;
    const double delta = reward + gamma * next_value - tr.value;
    running = delta + gamma * lambda * running;
    out.advantages[i] = running;
    out.targets[i] = running + tr.value;
    next_value = tr.value;
  }
  return out;
}

Advantages compute_gae(const Trajectory& trajectory, const ValueFunction& vf, double gamma, double lambda) {
  Trajectory copy = trajectory;
  ValueEvaluator v(vf);
  for (auto& tr : copy.transitions) tr.value = v(tr.state);
  copy.bootstrap_value =
      (copy.cause == TerminalCause::Timeout && !copy.transitions.empty()) ? v(copy.transitions.back().next_state) : 0.0;
  return compute_gae(copy, gamma, lambda);
}

void PpoBatch::append(std::span<const double> state, std::span<const double> action, double log_prob,
                      double adv, double target) {
  if (size() == 0 && state_size == 0) {
    state_size = state.size();
    action_size = action.size();
  }
  require(state.size() == state_size && action.size() == action_size, ErrorCode::Dimension,
          "ppo batch row size mismatch");
  states.insert(states.end(), state.begin(), state.end());
  actions.insert(actions.end(), action.begin(), action.end());
  old_log_prob.push_back(log_prob);
  advantage.push_back(adv);
  value_target.push_back(target);
}

void normalize_advantages(PpoBatch& batch) {
  const std::size_t n = batch.size();
  if (n == 0) return;
  const double mean = std::accumulate(batch.advantage.begin(), batch.advantage.end(), 0.0) / n;
  double var = 0.0;
  for (double a : batch.advantage) var += (a - mean) * (a - mean);
  var /= n;
  const double inv = 1.0 / (std::sqrt(var) + 1e-8);
  for (double& a : batch.advantage) a = (a - mean) * inv;
}

double clipped_surrogate_weight(double ratio, double advantage, double clip) {
  if (advantage > 0.0 && ratio > 1.0 + clip) return 0.0;
  if (advantage < 0.0 && ratio < 1.0 - clip) return 0.0;
  return ratio * advantage;
}

PpoOptimizers make_optimizers(const GaussianPolicy& policy, const ValueFunction& vf, const PpoConfig& config) {
  std::vector<std::size_t> sizes;
  for (auto s : policy.segments()) sizes.push_back(s.size());
  AdamConfig pc;
  pc.step_size = config.step_size;
  AdamConfig vc;
  vc.step_size = config.value_step_size;
  return {AdamState(std::move(sizes), pc), AdamState::for_params(vf.net, vc)};
}

namespace {

void clip_global_norm(std::vector<std::span<double>> segments, double max_norm) {
  if (max_norm <= 0.0) return;
  double sq = 0.0;
  for (auto s : segments)
    for (double v : s) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm <= max_norm || !std::isfinite(norm)) return;
  const double k = max_norm / norm;
  for (auto s : segments)
    for (double& v : s) v *= k;
}

template <typename Segs>
std::vector<std::span<const double>> const_segments(const Segs& segs) {
  return {segs.begin(), segs.end()};
}

}  // namespace

PpoDiagnostics ppo_update(GaussianPolicy& policy, ValueFunction& vf, PpoOptimizers& optimizers,
                          const PpoBatch& batch, const PpoConfig& config, Rng& rng) {
  const std::size_t n = batch.size();
  PpoDiagnostics diag;
  if (n == 0) return diag;
  require(config.minibatch > 0 && config.epochs >= 0, ErrorCode::InvalidArgument, "bad ppo minibatch/epochs");
  const std::size_t ds = batch.state_size;
  const std::size_t da = batch.action_size;

  PolicyEvaluator pi(policy);
  ValueEvaluator v(vf);
  PolicyGradient pgrad = PolicyGradient::zeros_like(policy);
  MlpParams vgrad = MlpParams::zeros(vf.net.layer_sizes);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  long clipped = 0;
  long seen = 0;
  for (int epoch = 0; epoch < config.epochs && !diag.kl_early_stop; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_vloss = 0.0;
    int minibatches = 0;
    for (std::size_t start = 0; start < n; start += config.minibatch) {
      const std::size_t end = std::min(n, start + config.minibatch);
      const double inv_m = 1.0 / static_cast<double>(end - start);
      pgrad.set_zero();
      vgrad.set_zero();
      double kl = 0.0;
      double vloss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        std::span<const double> s(&batch.states[i * ds], ds);
        std::span<const double> a(&batch.actions[i * da], da);
        const double lp = pi.log_prob_forward(s, a);
        const double ratio = std::exp(lp - batch.old_log_prob[i]);
        kl += batch.old_log_prob[i] - lp;
        const double w = clipped_surrogate_weight(ratio, batch.advantage[i], config.clip);
        if (w == 0.0 && batch.advantage[i] != 0.0) ++clipped;
        ++seen;
        if (w != 0.0) pi.log_prob_backward(a, -w * inv_m, pgrad);

        const double target = (batch.value_target[i] - vf.out_shift) / vf.out_scale;
        const double pred = v.forward_normalized(s);
        const double err = pred - target;
        vloss += 0.5 * err * err;
        v.backward_normalized(err * inv_m, vgrad);
      }
      for (double& g : pgrad.log_std) g -= config.entropy_coef;
      clip_global_norm(pgrad.segments(), config.max_grad_norm);
      clip_global_norm(vgrad.segments(), config.max_grad_norm);
      auto psegs = policy.segments();
      auto pg = pgrad.segments();
      optimizers.policy.step(psegs, const_segments(pg));
      policy.clamp_log_std();
      adam_step(optimizers.value, vf.net, vgrad);

      epoch_vloss += vloss * inv_m;
      ++minibatches;
      diag.approx_kl = kl * inv_m;
      if (config.kl_cap > 0.0 && diag.approx_kl > config.kl_cap) {
        diag.kl_early_stop = true;
        break;
      }
    }
    diag.value_loss.push_back(epoch_vloss / std::max(1, minibatches));
    ++diag.epochs_run;
  }
  diag.clip_fraction = seen ? static_cast<double>(clipped) / seen : 0.0;
  return diag;
}

namespace {

bool better(const EvalOutcome& a, const EvalOutcome& b) {
  if (a.success_rate != b.success_rate) return a.success_rate > b.success_rate;
  return a.mean_return > b.mean_return;
}

// Fixes the value output normalization of a fresh network from the first batch.
void calibrate_value_scale(ValueFunction& vf, const std::vector<Trajectory>& batch, const SubtaskSpec& spec) {
  std::vector<double> returns;
  for (const auto& traj : batch) {
    double g = 0.0;
    const std::size_t n = traj.length();
    for (std::size_t i = n; i-- > 0;) {
      double r = traj.transitions[i].reward;
      if (i + 1 == n && traj.cause == TerminalCause::ValueThreshold) r += spec.gamma * traj.terminal_bonus;
      g = r + spec.gamma * g;
      returns.push_back(g);
    }
  }
  const double mean = std::accumulate(returns.begin(), returns.end(), 0.0) / returns.size();
  double var = 0.0;
  for (double r : returns) var += (r - mean) * (r - mean);
  double scale = std::max(1.0, std::sqrt(var / returns.size()));
  if (const auto* relay = std::get_if<RelayObjective>(&spec.objective))
    scale = std::max(scale, 0.25 * relay->alpha * std::abs(relay->parent_threshold));
  vf.out_shift = mean;
  vf.out_scale = scale;
  // Start from V == mean so the first advantages are centred.
  vf.net.weights.back().fill(0.0);
  vf.net.biases.back().fill(0.0);
}

void refresh_values(std::vector<Trajectory>& batch, const ValueFunction& vf) {
  ValueEvaluator v(vf);
  for (auto& traj : batch) {
    for (auto& tr : traj.transitions) tr.value = v(tr.state);
    if (traj.cause == TerminalCause::Timeout) traj.bootstrap_value = v(traj.transitions.back().next_state);
  }
}

}  // namespace

PolicySearchResult policy_search(const SubtaskSpec& spec, const std::optional<WarmStart>& warm_start, long budget,
                                 const SuccessCriterion& success, const SearchConfig& config,
                                 std::uint64_t seed, const IterationObserver& observer) {
  spec.validate();
  require(budget > 0, ErrorCode::InvalidArgument, "policy search budget must be positive");
  const auto& env = *spec.env;
  Rng init_rng = make_rng(seed, "init");
  Rng collect_rng = make_rng(seed, "collect");
  Rng update_rng = make_rng(seed, "minibatch");

  GaussianPolicy policy;
  ValueFunction vf;
  bool fresh_value = false;
  if (warm_start) {
    policy = warm_start->policy;
    vf = warm_start->value;
  } else {
    policy = GaussianPolicy::create(env.features(), config.network.policy_hidden, env.spec().action_size, init_rng,
                                    env.spec().action_scale);
    vf = ValueFunction::create(env.features(), config.network.value_hidden, init_rng);
    fresh_value = true;
  }
  policy.validate();
  vf.validate();
  PpoOptimizers opt = make_optimizers(policy, vf, config.ppo);

  PolicySearchResult best{policy, vf, {}};
  EvalOutcome best_eval{-1.0, -1e300, false};
  PolicySearchReport report;
  int streak = 0;
  const long batch_steps = std::max<long>(config.ppo.batch_steps, spec.termination.max_steps);

  while (report.sample_count < budget) {
    auto batch = collect_rollouts(spec, policy, vf, batch_steps, collect_rng);
    if (fresh_value) {
      calibrate_value_scale(vf, batch, spec);
      refresh_values(batch, vf);
      fresh_value = false;
    }
    PpoBatch data;
    double ret = 0.0;
    double obj = 0.0;
    for (const auto& traj : batch) {
      const auto adv = compute_gae(traj, config.ppo.gamma, config.ppo.lambda);
      for (std::size_t i = 0; i < traj.length(); ++i) {
        const auto& tr = traj.transitions[i];
        data.append(tr.state, tr.action, tr.log_prob, adv.advantages[i], adv.targets[i]);
      }
      report.sample_count += static_cast<long>(traj.length());
      ret += traj.undiscounted_return();
      obj += traj.discounted_objective(spec.gamma);
    }
    report.mean_return.push_back(ret / batch.size());
    report.mean_objective.push_back(obj / batch.size());
    normalize_advantages(data);
    ppo_update(policy, vf, opt, data, config.ppo, update_rng);
    ++report.iterations;

    if (observer) observer({report.iterations, report.sample_count, &policy, &vf});
    const bool last = report.sample_count >= budget;
    if (!last && report.iterations % std::max(1, config.eval_every) != 0) continue;
    const EvalOutcome eval = success ? success(policy, vf) : EvalOutcome{};
    report.evaluations.push_back(eval);
    if (better(eval, best_eval)) {
      best_eval = eval;
      best.policy = policy;
      best.value = vf;
      report.best_iteration = report.iterations;
    }
    streak = eval.success ? streak + 1 : 0;
    if (streak >= config.confirm_iterations) {
      report.succeeded = true;
      break;
    }
  }
  best.report = std::move(report);
  return best;
}

}  // namespace relaynet
