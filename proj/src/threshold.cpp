#include "relaynet/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "relaynet/error.hpp"

namespace relaynet {

void ConfusionCounts::add(bool predicted, bool actual) {
  if (predicted && actual) ++tp;
  else if (predicted) ++fp;
  else if (actual) ++fn;
  else ++tn;
}

long count_errors(std::span<const LabeledValue> data, double threshold) {
  long errors = 0;
  for (const auto& d : data) errors += ((d.predicted_value > threshold) != (d.label == 1)) ? 1 : 0;
  return errors;
}

namespace {

double fallback_margin(double v) { return 1e-6 * (1.0 + std::abs(v)); }

struct Group {
  double value;
  long ones;
  long zeros;
};

std::vector<Group> group_sorted(std::span<const LabeledValue> data) {
  std::vector<LabeledValue> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const LabeledValue& a, const LabeledValue& b) { return a.predicted_value < b.predicted_value; });
  std::vector<Group> groups;
  for (const auto& d : sorted) {
    if (groups.empty() || groups.back().value != d.predicted_value) groups.push_back({d.predicted_value, 0, 0});
    (d.label == 1 ? groups.back().ones : groups.back().zeros)++;
  }
  return groups;
}

}  // namespace

StumpFit stump_fit_detailed(std::span<const LabeledValue> data) {
  require(!data.empty(), ErrorCode::DegenerateLabels, "stump fit on empty data");
  long total_ones = 0;
  for (const auto& d : data) {
    require(d.label == 0 || d.label == 1, ErrorCode::InvalidArgument, "labels must be 0 or 1");
    require(std::isfinite(d.predicted_value), ErrorCode::Numeric, "non-finite value in stump data");
    total_ones += d.label;
  }
  const long n = static_cast<long>(data.size());
  require(total_ones > 0 && total_ones < n, ErrorCode::DegenerateLabels, "stump fit needs both labels");

  const auto groups = group_sorted(data);
  const std::size_t g = groups.size();
  // Cut c predicts the first c groups bad and the rest good.
  long ones_below = 0;
  long zeros_below = 0;
  const long total_zeros = n - total_ones;
  long best_errors = std::numeric_limits<long>::max();
  double best_gap = -2.0;
  double best_cut = 0.0;
  long best_reversed = std::numeric_limits<long>::max();
  for (std::size_t c = 0; c <= g; ++c) {
    if (c > 0) {
      ones_below += groups[c - 1].ones;
      zeros_below += groups[c - 1].zeros;
    }
    const long errors = ones_below + (total_zeros - zeros_below);
    const long reversed = zeros_below + (total_ones - ones_below);
    best_reversed = std::min(best_reversed, reversed);
    double cut;
    double gap;
    if (c == 0) {
      cut = groups.front().value - fallback_margin(groups.front().value);
      gap = -1.0;
    } else if (c == g) {
      cut = groups.back().value + fallback_margin(groups.back().value);
      gap = -1.0;
    } else {
      cut = 0.5 * (groups[c - 1].value + groups[c].value);
      gap = groups[c].value - groups[c - 1].value;
    }
    if (errors < best_errors || (errors == best_errors && gap > best_gap)) {
      best_errors = errors;
      best_gap = gap;
      best_cut = cut;
    }
  }
  return {best_cut, best_errors, best_reversed < best_errors};
}

double stump_fit(std::span<const LabeledValue> data) { return stump_fit_detailed(data).threshold; }

SubtaskSpec calibration_spec(const SubtaskSpec& spec) {
  SubtaskSpec out = spec;
  out.termination.value_threshold.reset();
  if (const auto* relay = std::get_if<RelayObjective>(&spec.objective))
    out.termination.value_threshold = ValueThreshold{relay->parent_value, relay->parent_threshold};
  return out;
}

CalibrationSet collect_calibration(const GaussianPolicy& policy, const SubtaskSpec& spec, int count, Rng& rng) {
  const SubtaskSpec run = calibration_spec(spec);
  run.validate();
  CalibrationSet calib;
  for (int i = 0; i < count; ++i) {
    auto start = sample_initial(*run.env, run.rho, 1.5, rng);
    const auto traj = rollout(run, policy, nullptr, start, true, rng);
    calib.states.push_back(std::move(start));
    calib.returns.push_back(traj.discounted_objective(run.gamma));
    calib.failed.push_back(traj.cause == TerminalCause::Failure);
  }
  return calib;
}

ThresholdReport fit_threshold(const ValueFunction& vf, const CalibrationSet& calib, double holdout_fraction) {
  const std::size_t m = calib.size();
  require(m > 0 && calib.returns.size() == m && calib.failed.size() == m, ErrorCode::InvalidArgument,
          "malformed calibration set");
  require(holdout_fraction >= 0.0 && holdout_fraction < 1.0, ErrorCode::InvalidArgument,
          "holdout fraction must lie in [0, 1)");
  ThresholdReport report;
  report.m = static_cast<int>(m);

  double sum = 0.0;
  long survivors = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (calib.failed[i]) continue;
    sum += calib.returns[i];
    ++survivors;
  }
  require(survivors > 0, ErrorCode::NoSuccessfulRollouts, "every calibration rollout failed");
  report.r_bar = sum / static_cast<double>(survivors);

  ValueEvaluator v(vf);
  std::vector<LabeledValue> data(m);
  report.labels.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    report.labels[i] = calib.returns[i] > report.r_bar ? 1 : 0;
    data[i] = {v(calib.states[i]), report.labels[i]};
  }

  const auto held = static_cast<std::size_t>(std::llround(holdout_fraction * static_cast<double>(m)));
  const std::size_t n_fit = std::max<std::size_t>(1, m - held);
  std::span<const LabeledValue> fit(data.data(), n_fit);
  const long ones = std::count_if(fit.begin(), fit.end(), [](const LabeledValue& d) { return d.label == 1; });
  if (ones == 0 || ones == static_cast<long>(n_fit)) {
    report.degenerate = true;
    double lo = fit.front().predicted_value;
    double hi = lo;
    for (const auto& d : fit) {
      lo = std::min(lo, d.predicted_value);
      hi = std::max(hi, d.predicted_value);
    }
    if (ones == 0) {
      report.v_bar = hi + fallback_margin(hi);
      report.warning = "degenerate labels: no calibration return exceeds the mean; threshold above every value";
    } else {
      report.v_bar = lo - fallback_margin(lo);
      report.warning = "degenerate labels: every calibration return exceeds the mean; threshold below every value";
    }
    report.fit_errors = count_errors(fit, report.v_bar);
  } else {
    const auto stump = stump_fit_detailed(fit);
    report.v_bar = stump.threshold;
    report.fit_errors = stump.errors;
    report.inverted = stump.inverted;
    if (stump.inverted) report.warning = "value function ranks calibration states backwards";
  }
  for (std::size_t i = n_fit; i < m; ++i)
    report.holdout.add(data[i].predicted_value > report.v_bar, data[i].label == 1);
  return report;
}

ThresholdReport compute_threshold(const GaussianPolicy& policy, const ValueFunction& vf, const SubtaskSpec& spec,
                                  int count, double holdout_fraction, Rng& rng, CalibrationSet* calib_out) {
  require(count >= 20, ErrorCode::InvalidArgument, "threshold calibration needs at least 20 rollouts");
  require(!spec.termination.value_threshold.has_value(), ErrorCode::InvalidArgument,
          "calibration expects the base termination set");
  auto calib = collect_calibration(policy, spec, count, rng);
  auto report = fit_threshold(vf, calib, holdout_fraction);
  if (calib_out) *calib_out = std::move(calib);
  return report;
}

RefineResult refine_value_fn(const ValueFunction& vf, const GaussianPolicy& policy, const SubtaskSpec& spec,
                             const CalibrationSet& calib, double holdout_fraction, const RefineConfig& config,
                             Rng& rng) {
  RefineResult result{vf, fit_threshold(vf, calib, holdout_fraction), {}, false};
  if (config.rollouts <= 0) {
    result.after = result.before;
    return result;
  }
  const SubtaskSpec run = calibration_spec(spec);
  run.validate();

  std::vector<double> states;
  std::vector<double> targets;
  const std::size_t ds = run.env->spec().state_size;
  for (int i = 0; i < config.rollouts; ++i) {
    auto start = sample_initial(*run.env, run.rho, 1.5, rng);
    const auto traj = rollout(run, policy, &vf, std::move(start), true, rng);
    const auto adv = compute_gae(traj, run.gamma, 1.0);
    for (std::size_t t = 0; t < traj.length(); ++t) {
      const auto& s = traj.transitions[t].state;
      states.insert(states.end(), s.begin(), s.end());
      targets.push_back(adv.targets[t]);
    }
  }

  ValueFunction refined = vf;
  AdamConfig ac;
  ac.step_size = config.step_size;
  AdamState adam = AdamState::for_params(refined.net, ac);
  MlpParams grads = MlpParams::zeros(refined.net.layer_sizes);
  const std::size_t n = targets.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  {
    ValueEvaluator v(refined);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t start = 0; start < n; start += config.minibatch) {
        const std::size_t end = std::min(n, start + config.minibatch);
        const double inv_m = 1.0 / static_cast<double>(end - start);
        grads.set_zero();
        for (std::size_t k = start; k < end; ++k) {
          const std::size_t i = order[k];
          const double pred = v.forward_normalized(std::span<const double>(&states[i * ds], ds));
          const double target = (targets[i] - refined.out_shift) / refined.out_scale;
          v.backward_normalized((pred - target) * inv_m, grads);
        }
        adam_step(adam, refined.net, grads);
      }
    }
  }
  refined.validate();
  result.after = fit_threshold(refined, calib, holdout_fraction);
  if (result.after.holdout.accuracy() < result.before.holdout.accuracy()) {
    result.rolled_back = true;
    result.after = result.before;
  } else {
    result.value = std::move(refined);
  }
  return result;
}

}  // namespace relaynet
