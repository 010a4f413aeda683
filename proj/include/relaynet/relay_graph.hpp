#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "relaynet/error.hpp"
#include "relaynet/optimizer.hpp"
#include "relaynet/threshold.hpp"

namespace relaynet {

struct RelayNode {
  int id = 0;
  std::optional<GaussianDist> rho;  // empty only for the dummy root
  int chain = 0;
  int chain_index = 0;
};

struct RelayEdge {
  int from = 0;
  int to = 0;
  std::shared_ptr<const GaussianPolicy> policy;
  std::shared_ptr<const ValueFunction> value;
  double threshold = 0.0;
  std::vector<std::string> failure_predicates;
  double alpha = 0.0;
  long samples = 0;
  ThresholdReport report;
  std::optional<ThresholdReport> refined;
};

struct MergeRecord {
  int merged_from = 0;  // node whose distribution matched (junction)
  int merged_into = 0;  // tip of the chain that was being grown
  double similarity = 0.0;
  long samples_saved = 0;
};

class RelayGraph {
 public:
  static constexpr int kRoot = 0;

  RelayGraph();

  int add_node(GaussianDist rho, int chain, int chain_index);
  /// Rejects edges that would break acyclicity, exceed two outgoing edges or
  /// carry a non-finite threshold.
  int add_edge(RelayEdge edge);
  void add_merge(MergeRecord merge);

  const std::vector<RelayNode>& nodes() const noexcept { return nodes_; }
  const std::vector<RelayEdge>& edges() const noexcept { return edges_; }
  const std::vector<MergeRecord>& merges() const noexcept { return merges_; }
  const RelayNode& node(int id) const;
  const RelayEdge& edge(int index) const;

  std::vector<int> out_edges(int node) const;
  bool reaches_root(int node) const;
  /// Nodes reachable from `node` by following edges (excluding `node`).
  std::vector<int> ancestors(int node) const;
  std::size_t chain_node_count() const noexcept { return nodes_.size() - 1; }
  void validate() const;

 private:
  std::vector<RelayNode> nodes_;
  std::vector<RelayEdge> edges_;
  std::vector<MergeRecord> merges_;
};

/// base plus V(s) > threshold; base is left untouched.
TerminationSet augment_termination(const TerminationSet& base, std::shared_ptr<const ValueFunction> vf,
                                   double threshold);

using ValueWithGradient = std::function<double(std::span<const double>, std::span<double>)>;

/// min V(s) + w |s - target|^2  s.t.  V(s) >= threshold, C(s) >= 0.
struct InitialMeanProblem {
  ValueWithGradient value;
  double threshold = 0.0;
  std::vector<double> target;
  double w = 0.0;
  /// Pulls a point back into C(s) >= 0; identity when absent.
  std::function<void(std::span<double>)> project;
  /// s - t with any periodic wrapping; plain subtraction when absent.
  std::function<std::vector<double>(std::span<const double>, std::span<const double>)> difference;
  std::function<bool(std::span<const double>)> feasible;
};

struct InitialMeanConfig {
  int max_iterations = 500;
  double initial_step = 0.05;
  double min_step = 1e-10;
  double tolerance = 1e-10;
};

struct InitialMeanResult {
  std::vector<double> mean;
  double objective = 0.0;
  int iterations = 0;
  bool stalled = false;
};

InitialMeanResult next_initial_mean(const InitialMeanProblem& problem, std::span<const double> prev_mean,
                                    const InitialMeanConfig& config = {});
/// Network form: V_k and the environment constraint.
InitialMeanResult next_initial_mean(const ValueFunction& vf, double threshold, std::span<const double> target,
                                    std::span<const double> prev_mean, double w, const Environment& env,
                                    const InitialMeanConfig& config = {});

/// median |V| / median |s - target|^2 over states drawn from rho_prev; 1 when
/// the distance median is zero.
double choose_w(const ValueFunction& vf, const GaussianDist& rho_prev, std::span<const double> target,
                const Environment& env, int samples, Rng& rng);
double choose_w(std::span<const double> values, std::span<const double> squared_distances);

enum class ExecutionMode { ParentChain, BestV, BestVEveryStep };
enum class JunctionChoice { Value, Random };

/// The original task: rho is the distribution to solve, base the termination
/// set T, root_failures the extra predicates of T_0 used by the root node.
struct RelayTask {
  std::shared_ptr<const Environment> env;
  GaussianDist rho;
  GaussianDist rho0;
  TerminationSet base;
  std::vector<std::string> root_failures;
  double gamma = 0.99;

  TerminationSet root_termination() const;
  void validate() const;
};

struct RelayConfig {
  double alpha = 30.0;
  int chain_cap = 8;
  long node_budget = 400000;
  long total_budget = 2000000;
  int calibration_rollouts = 200;
  double holdout_fraction = 0.25;
  bool refine = true;
  RefineConfig refine_config;
  int w_samples = 64;
  InitialMeanConfig eq2;
  SearchConfig search;
  double success_rate = 0.9;
  int success_episodes = 20;
  ExecutionMode mode = ExecutionMode::ParentChain;
  JunctionChoice junction = JunctionChoice::Value;
  int eval_episodes = 20;
  int curve_every = 5;
};

struct RelayEvent {
  std::string kind;  // node_added, merge, abandoned
  int node = 0;
  int edge = -1;
  double v_bar = 0.0;
  long samples = 0;
  long total_samples = 0;
  double w = 0.0;
  bool stalled = false;
  std::string note;
};

using RelayEventSink = std::function<void(const RelayEvent&)>;

struct CurveRow {
  long samples = 0;
  double mean_return = 0.0;
  double stderr_ = 0.0;
  std::string label;
};

struct ConfusionRow {
  int node = 0;
  ConfusionCounts counts;
  std::string phase;  // post-train, post-refine
};

struct RelayRun {
  RelayGraph graph;
  std::vector<RelayEvent> events;
  std::vector<CurveRow> curve;
  std::vector<ConfusionRow> confusion;
  long total_samples = 0;
  bool succeeded = false;
};

/// Carries the partially built graph when construction gives up.
class ConstructionAbandoned : public Error {
 public:
  ConstructionAbandoned(std::string message, RelayRun partial);
  const RelayRun& partial() const noexcept { return *partial_; }

 private:
  std::shared_ptr<RelayRun> partial_;
};

/// Chain state shared by single and multi-chain construction.
struct ChainContext {
  const RelayTask* task = nullptr;
  const RelayConfig* config = nullptr;
  std::uint64_t seed = 0;
  RelayRun* run = nullptr;
  RelayEventSink sink;
};

/// Trains one edge out of `from` into node `to` (RelayGraph::kRoot for the
/// root subtask), calibrates and refines its threshold, and adds it.
int train_edge(ChainContext& ctx, int from, int to, const std::string& stream,
               const RelayEvent* proposal = nullptr);

/// Solves Eq. 2 against the edge leaving `node` and returns the proposed
/// distribution of the next node.
GaussianDist propose_next(ChainContext& ctx, int node, const std::string& stream, RelayEvent& event);

/// Fraction of deterministic graph executions from `dist` that succeed.
double graph_success_rate(const RelayGraph& graph, const RelayTask& task, const GaussianDist& dist, int episodes,
                          ExecutionMode mode, JunctionChoice junction, Rng& rng);

/// Copy of the nodes and edges of one chain (ids renumbered).
RelayGraph chain_subgraph(const RelayGraph& graph, int chain);

/// Called with each proposed next distribution; returning true ends the chain
/// without adding the proposal as a node.
using ProposalHook = std::function<bool(ChainContext&, int tip, const GaussianDist& proposal, RelayEvent& info)>;

/// The construction loop for one chain rooted at rho0. Returns once the chain
/// alone succeeds from the task distribution or the hook ends it.
bool grow_chain(ChainContext& ctx, int chain, const GaussianDist& rho0, const ProposalHook& hook = {});

/// Appends the AUTO testing-curve row for the current graph.
void append_final_curve(ChainContext& ctx);

RelayRun learn_relay_networks(const RelayTask& task, const RelayConfig& config, std::uint64_t seed,
                              const RelayEventSink& sink = {});

}  // namespace relaynet
