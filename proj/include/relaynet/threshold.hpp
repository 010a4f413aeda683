#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "relaynet/optimizer.hpp"

namespace relaynet {

struct LabeledValue {
  double predicted_value = 0.0;
  int label = 0;  // 1 good, 0 bad
};

struct ConfusionCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  long tn = 0;

  long total() const noexcept { return tp + fp + fn + tn; }
  double accuracy() const noexcept { return total() ? static_cast<double>(tp + tn) / total() : 0.0; }
  void add(bool predicted, bool actual);

  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Misclassifications of the rule "good iff value > threshold".
long count_errors(std::span<const LabeledValue> data, double threshold);

struct StumpFit {
  double threshold = 0.0;
  long errors = 0;
  /// The reversed rule (good iff value < threshold) would make strictly
  /// fewer errors: the value function ranks states backwards.
  bool inverted = false;
};

/// Minimum-error cut under "good iff V > cut"; ties go to the midpoint of the
/// widest gap. Throws DegenerateLabels if only one class is present.
StumpFit stump_fit_detailed(std::span<const LabeledValue> data);
double stump_fit(std::span<const LabeledValue> data);

/// Rollouts from the 1.5-inflated distribution with their true objective
/// values. For relay objectives the rollouts end on entering the parent's
/// good region, since the relay objective is defined on that stopping time.
struct CalibrationSet {
  std::vector<std::vector<double>> states;
  std::vector<double> returns;
  std::vector<bool> failed;

  std::size_t size() const noexcept { return states.size(); }
};

CalibrationSet collect_calibration(const GaussianPolicy& policy, const SubtaskSpec& spec, int count, Rng& rng);

struct ThresholdReport {
  double v_bar = 0.0;
  double r_bar = 0.0;
  int m = 0;
  ConfusionCounts holdout;
  long fit_errors = 0;
  bool degenerate = false;
  bool inverted = false;
  std::string warning;
  std::vector<int> labels;  // per calibration rollout, R_i > r_bar
};

/// Labels the calibration set against the mean non-failure return, fits the
/// stump on the leading (1 - holdout_fraction) share and scores the rest.
ThresholdReport fit_threshold(const ValueFunction& vf, const CalibrationSet& calib, double holdout_fraction);

/// `spec.termination` is the base set (no value predicate); the relay
/// objective, if any, supplies the parent predicate.
ThresholdReport compute_threshold(const GaussianPolicy& policy, const ValueFunction& vf, const SubtaskSpec& spec,
                                  int count, double holdout_fraction, Rng& rng, CalibrationSet* calib_out = nullptr);

/// Termination used for calibration and refinement rollouts of `spec`.
SubtaskSpec calibration_spec(const SubtaskSpec& spec);

struct RefineConfig {
  int rollouts = 100;
  int epochs = 20;
  std::size_t minibatch = 256;
  double step_size = 1e-3;
};

struct RefineResult {
  ValueFunction value;
  ThresholdReport before;
  ThresholdReport after;
  bool rolled_back = false;
};

/// Extra regression of V onto empirical discounted returns, then a fresh
/// threshold on the same calibration set. Rolls back if held-out accuracy drops.
RefineResult refine_value_fn(const ValueFunction& vf, const GaussianPolicy& policy, const SubtaskSpec& spec,
                             const CalibrationSet& calib, double holdout_fraction, const RefineConfig& config,
                             Rng& rng);

}  // namespace relaynet
