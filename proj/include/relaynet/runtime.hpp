#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "relaynet/relay_graph.hpp"

namespace relaynet {

struct SwitchEvent {
  int step = 0;
  int from_edge = -1;
  int to_edge = -1;
  int trigger_edge = -1;  // parent edge whose predicate fired
  int from_node = 0;
  int to_node = 0;
  double trigger_value = 0.0;
  /// Parent-threshold crossing (as opposed to best-V reselection).
  bool parent_crossing = true;
};

struct ExecutionTrace {
  std::vector<std::vector<double>> states;  // s_0 .. s_T
  std::vector<int> active_edge;             // edge choosing action t
  std::vector<int> active_node;
  std::vector<std::vector<double>> actions;
  std::vector<double> rewards;
  std::vector<SwitchEvent> switches;
  TerminalCause cause = TerminalCause::None;
  double undiscounted_return = 0.0;
  double discounted_return = 0.0;
  bool succeeded = false;

  std::size_t length() const noexcept { return actions.size(); }
};

struct ExecutionOptions {
  ExecutionMode mode = ExecutionMode::ParentChain;
  JunctionChoice junction = JunctionChoice::Value;
  int max_steps = 1;
  bool deterministic = true;
  double gamma = 0.99;
  /// Forces the first active edge; -1 selects the argmax-V edge.
  int start_edge = -1;
};

/// Runs the graph from `start`. The start edge is the argmax of every edge's
/// value; control passes to a parent edge the first step its V exceeds V̄.
ExecutionTrace execute_graph(const RelayGraph& graph, const Environment& env, std::vector<double> start,
                             const ExecutionOptions& options, Rng& rng);

/// Recomputes every parent crossing in `trace`: V > V̄ at the switch and
/// V <= V̄ one step earlier whenever the child was already active then.
bool first_crossing_holds(const RelayGraph& graph, const ExecutionTrace& trace);

struct ReturnStats {
  double mean_return = 0.0;
  double stderr_ = 0.0;
  double success_rate = 0.0;
};

/// Deterministic executions from `dist`, returns discounted with options.gamma.
ReturnStats evaluate_graph(const RelayGraph& graph, const Environment& env, const GaussianDist& dist, int episodes,
                           const ExecutionOptions& options, Rng& rng);

double sample_stderr(const std::vector<double>& values);

struct Checkpoint {
  long samples = 0;
  const RelayGraph* graph = nullptr;
};

/// One row per checkpoint; every checkpoint sees the same start states.
std::vector<CurveRow> testing_curve(const std::vector<Checkpoint>& checkpoints, const RelayTask& task,
                                    int episodes, const ExecutionOptions& options, std::uint64_t seed,
                                    const std::string& label);

/// Episodes from the 1.5-inflated distribution; actual = not failure
/// terminated, predicted = V(s_0) > threshold.
ConfusionCounts confusion_eval(const ValueFunction& vf, double threshold, const GaussianPolicy& policy,
                               const SubtaskSpec& spec, int episodes, Rng& rng);

enum class BaselineKind { ONE, NR, CL };

const char* to_string(BaselineKind kind);
BaselineKind parse_baseline(const std::string& name);

/// What a finished relay run hands to the baselines.
struct RelayArtifacts {
  std::vector<GaussianDist> rhos;       // chain order, rho_0 first
  std::vector<long> node_samples;       // per node, same order
  std::vector<std::size_t> hidden_sum;  // per-layer sum of relay policy widths
  long total_samples = 0;

  static RelayArtifacts from_run(const RelayRun& run);
  /// Same, with the total taken as the sum of edge sample counts.
  static RelayArtifacts from_graph(const RelayGraph& graph);
  void validate() const;
};

struct BaselineRun {
  BaselineKind kind = BaselineKind::ONE;
  RelayGraph graph;
  std::vector<CurveRow> curve;
  long samples = 0;
  std::vector<long> stage_samples;
  /// CL only: stage_start[i] is the warm start of stage i + 1; stage_end[i]
  /// what stage i returned.
  std::vector<GaussianPolicy> stage_start;
  std::vector<GaussianPolicy> stage_end;
};

BaselineRun train_baseline(BaselineKind kind, const RelayTask& task, const RelayArtifacts& artifacts,
                           const RelayConfig& config, std::uint64_t seed);

}  // namespace relaynet
