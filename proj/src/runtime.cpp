#include "relaynet/runtime.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "relaynet/error.hpp"

namespace relaynet {

namespace {

struct EdgeRunner {
  std::vector<PolicyEvaluator> policies;
  std::vector<ValueEvaluator> values;

  explicit EdgeRunner(const RelayGraph& graph) {
    for (const auto& e : graph.edges()) {
      policies.emplace_back(*e.policy);
      values.emplace_back(*e.value);
    }
  }
};

int argmax_value(EdgeRunner& run, const std::vector<int>& edges, std::span<const double> state, double* best_v) {
  int best = -1;
  double bv = -std::numeric_limits<double>::infinity();
  for (int e : edges) {
    const double v = run.values[static_cast<std::size_t>(e)](state);
    if (best < 0 || v > bv) {
      best = e;
      bv = v;
    }
  }
  if (best_v) *best_v = bv;
  return best;
}

}  // namespace

ExecutionTrace execute_graph(const RelayGraph& graph, const Environment& env, std::vector<double> start,
                             const ExecutionOptions& options, Rng& rng) {
  require(!graph.edges().empty(), ErrorCode::InvalidArgument, "cannot execute an empty graph");
  require(options.max_steps >= 1, ErrorCode::InvalidArgument, "max_steps must be at least 1");
  require(start.size() == env.spec().state_size, ErrorCode::Dimension, "start state size mismatch");
  require(all_finite(start), ErrorCode::Numeric, "start state is not finite");
  const auto& edges = graph.edges();
  EdgeRunner run(graph);
  std::vector<int> all(edges.size());
  std::iota(all.begin(), all.end(), 0);

  ExecutionTrace trace;
  std::vector<double> s = std::move(start);
  trace.states.push_back(s);
  require(options.start_edge < static_cast<int>(edges.size()), ErrorCode::InvalidArgument, "unknown start edge");
  int active = options.start_edge >= 0 ? options.start_edge : argmax_value(run, all, s, nullptr);

  auto cascade = [&](int step) {
    if (options.mode == ExecutionMode::BestVEveryStep) {
      const int pick = argmax_value(run, all, s, nullptr);
      if (pick != active) {
        trace.switches.push_back({step, active, pick, -1, edges[static_cast<std::size_t>(active)].from,
                                  edges[static_cast<std::size_t>(pick)].from,
                                  run.values[static_cast<std::size_t>(pick)](s), false});
        active = pick;
      }
      return;
    }
    for (;;) {
      const RelayEdge& cur = edges[static_cast<std::size_t>(active)];
      if (cur.to == RelayGraph::kRoot) return;
      std::vector<int> crossing;
      std::vector<double> crossing_v;
      for (int p : graph.out_edges(cur.to)) {
        const double v = run.values[static_cast<std::size_t>(p)](s);
        if (v > edges[static_cast<std::size_t>(p)].threshold) {
          crossing.push_back(p);
          crossing_v.push_back(v);
        }
      }
      if (crossing.empty()) return;
      std::size_t k = 0;
      if (options.junction == JunctionChoice::Random && crossing.size() > 1) {
        k = std::min(crossing.size() - 1, static_cast<std::size_t>(uniform01(rng) * crossing.size()));
      } else {
        k = static_cast<std::size_t>(std::max_element(crossing_v.begin(), crossing_v.end()) - crossing_v.begin());
      }
      int next = crossing[k];
      if (options.mode == ExecutionMode::BestV) {
        std::vector<int> pool;
        for (int n : graph.ancestors(cur.from))
          for (int e : graph.out_edges(n)) pool.push_back(e);
        next = argmax_value(run, pool, s, nullptr);
      }
      trace.switches.push_back({step, active, next, crossing[k], cur.from, edges[static_cast<std::size_t>(next)].from,
                                crossing_v[k], true});
      active = next;
    }
  };

  cascade(0);
  const double bound = env.spec().action_bound;
  double discount = 1.0;
  for (int t = 0; t < options.max_steps; ++t) {
    trace.active_edge.push_back(active);
    trace.active_node.push_back(edges[static_cast<std::size_t>(active)].from);
    auto& pi = run.policies[static_cast<std::size_t>(active)];
    std::vector<double> a = options.deterministic ? pi.act_deterministic(s, bound) : pi.sample(s, bound, rng).action;
    const double r = env.reward(s, a);
    trace.rewards.push_back(r);
    trace.undiscounted_return += r;
    trace.discounted_return += discount * r;
    discount *= options.gamma;
    env.step(s, a);
    trace.actions.push_back(std::move(a));
    require(all_finite(s), ErrorCode::Numeric, "execution produced a non-finite state");
    trace.states.push_back(s);

    bool failed = false;
    for (const auto& p : edges[static_cast<std::size_t>(active)].failure_predicates)
      if (env.failure(p, s)) failed = true;
    if (failed) {
      trace.cause = TerminalCause::Failure;
      return trace;
    }
    cascade(t + 1);
  }
  trace.cause = TerminalCause::Timeout;
  trace.succeeded = edges[static_cast<std::size_t>(active)].to == RelayGraph::kRoot;
  return trace;
}

bool first_crossing_holds(const RelayGraph& graph, const ExecutionTrace& trace) {
  for (const auto& sw : trace.switches) {
    if (!sw.parent_crossing) continue;
    if (sw.trigger_edge < 0 || sw.step < 0 || sw.step >= static_cast<int>(trace.states.size())) return false;
    const RelayEdge& parent = graph.edge(sw.trigger_edge);
    const RelayEdge& child = graph.edge(sw.from_edge);
    if (std::find(graph.out_edges(child.to).begin(), graph.out_edges(child.to).end(), sw.trigger_edge) ==
        graph.out_edges(child.to).end())
      return false;
    ValueEvaluator v(*parent.value);
    if (!(v(trace.states[static_cast<std::size_t>(sw.step)]) > parent.threshold)) return false;
    if (sw.step > 0 && trace.active_edge[static_cast<std::size_t>(sw.step - 1)] == sw.from_edge &&
        !(v(trace.states[static_cast<std::size_t>(sw.step - 1)]) <= parent.threshold))
      return false;
  }
  return true;
}

double sample_stderr(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
}

ReturnStats evaluate_graph(const RelayGraph& graph, const Environment& env, const GaussianDist& dist, int episodes,
                           const ExecutionOptions& options, Rng& rng) {
  require(episodes >= 1, ErrorCode::InvalidArgument, "evaluation needs at least one episode");
  std::vector<double> returns;
  int ok = 0;
  for (int i = 0; i < episodes; ++i) {
    auto start = sample_initial(env, dist, 1.0, rng);
    const auto trace = execute_graph(graph, env, std::move(start), options, rng);
    returns.push_back(trace.discounted_return);
    ok += trace.succeeded ? 1 : 0;
  }
  ReturnStats stats;
  stats.mean_return = std::accumulate(returns.begin(), returns.end(), 0.0) / episodes;
  stats.stderr_ = sample_stderr(returns);
  stats.success_rate = static_cast<double>(ok) / episodes;
  return stats;
}

std::vector<CurveRow> testing_curve(const std::vector<Checkpoint>& checkpoints, const RelayTask& task,
                                    int episodes, const ExecutionOptions& options, std::uint64_t seed,
                                    const std::string& label) {
  std::vector<CurveRow> rows;
  for (const auto& cp : checkpoints) {
    require(cp.graph != nullptr, ErrorCode::InvalidArgument, "checkpoint without a graph");
    Rng rng = make_rng(seed, "curve");
    const auto stats = evaluate_graph(*cp.graph, *task.env, task.rho, episodes, options, rng);
    rows.push_back({cp.samples, stats.mean_return, stats.stderr_, label});
  }
  return rows;
}

ConfusionCounts confusion_eval(const ValueFunction& vf, double threshold, const GaussianPolicy& policy,
                               const SubtaskSpec& spec, int episodes, Rng& rng) {
  const SubtaskSpec run = calibration_spec(spec);
  run.validate();
  ValueEvaluator v(vf);
  ConfusionCounts counts;
  for (int i = 0; i < episodes; ++i) {
    auto start = sample_initial(*run.env, run.rho, 1.5, rng);
    const bool predicted = v(start) > threshold;
    const auto traj = rollout(run, policy, nullptr, std::move(start), true, rng);
    counts.add(predicted, traj.cause != TerminalCause::Failure);
  }
  return counts;
}

const char* to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::ONE: return "ONE";
    case BaselineKind::NR: return "NR";
    case BaselineKind::CL: return "CL";
  }
  return "?";
}

BaselineKind parse_baseline(const std::string& name) {
  if (name == "ONE") return BaselineKind::ONE;
  if (name == "NR") return BaselineKind::NR;
  if (name == "CL") return BaselineKind::CL;
  fail(ErrorCode::InvalidArgument, "unknown baseline: " + name);
}

RelayArtifacts RelayArtifacts::from_run(const RelayRun& run) {
  RelayArtifacts a = from_graph(run.graph);
  a.total_samples = run.total_samples;
  return a;
}

RelayArtifacts RelayArtifacts::from_graph(const RelayGraph& graph) {
  RelayArtifacts a;
  std::vector<const RelayNode*> chain;
  for (const auto& n : graph.nodes())
    if (n.id != RelayGraph::kRoot && n.chain == 0) chain.push_back(&n);
  std::sort(chain.begin(), chain.end(),
            [](const RelayNode* x, const RelayNode* y) { return x->chain_index < y->chain_index; });
  for (const auto* n : chain) {
    const auto out = graph.out_edges(n->id);
    require(!out.empty(), ErrorCode::InvalidArgument, "relay artifacts need trained edges");
    a.rhos.push_back(*n->rho);
    a.node_samples.push_back(graph.edge(out.front()).samples);
  }
  for (const auto& e : graph.edges()) {
    const auto hidden = e.policy->mean_net.hidden_sizes();
    if (a.hidden_sum.size() < hidden.size()) a.hidden_sum.resize(hidden.size(), 0);
    for (std::size_t i = 0; i < hidden.size(); ++i) a.hidden_sum[i] += hidden[i];
  }
  for (const auto& e : graph.edges()) a.total_samples += e.samples;
  return a;
}

void RelayArtifacts::validate() const {
  require(!rhos.empty() && rhos.size() == node_samples.size(), ErrorCode::InvalidArgument,
          "missing relay artifacts");
  require(!hidden_sum.empty() && total_samples > 0, ErrorCode::InvalidArgument, "missing relay artifacts");
  for (long s : node_samples) require(s > 0, ErrorCode::InvalidArgument, "relay node without samples");
}

namespace {

RelayGraph single_edge_graph(const GaussianDist& rho, const PolicySearchResult& result,
                             const std::vector<std::string>& failures, long samples) {
  RelayGraph g;
  const int n = g.add_node(rho, 0, 0);
  RelayEdge e;
  e.from = n;
  e.to = RelayGraph::kRoot;
  e.policy = std::make_shared<const GaussianPolicy>(result.policy);
  e.value = std::make_shared<const ValueFunction>(result.value);
  e.failure_predicates = failures;
  e.samples = samples;
  g.add_edge(std::move(e));
  return g;
}

}  // namespace

BaselineRun train_baseline(BaselineKind kind, const RelayTask& task, const RelayArtifacts& artifacts,
                           const RelayConfig& config, std::uint64_t seed) {
  task.validate();
  artifacts.validate();
  BaselineRun out;
  out.kind = kind;
  const std::string label = to_string(kind);

  ExecutionOptions exec;
  exec.mode = kind == BaselineKind::NR ? ExecutionMode::BestVEveryStep : ExecutionMode::ParentChain;
  exec.max_steps = task.base.max_steps;
  exec.gamma = task.gamma;
  const std::uint64_t curve_seed = derive_seed(seed, "curve");

  auto make_spec = [&](const GaussianDist& rho) {
    SubtaskSpec spec;
    spec.env = task.env;
    spec.rho = rho;
    spec.termination = task.base;
    spec.gamma = task.gamma;
    return spec;
  };
  // Baselines spend their whole budget; the criterion only ranks snapshots.
  auto ranking = [&](const SubtaskSpec& spec, const std::string& stream) -> SuccessCriterion {
    return [&, spec, eval_seed = derive_seed(seed, stream + "/success")](const GaussianPolicy& policy,
                                                                         const ValueFunction&) {
      Rng rng(eval_seed);
      int ok = 0;
      double ret = 0.0;
      for (int i = 0; i < config.success_episodes; ++i) {
        auto start = sample_initial(*spec.env, spec.rho, 1.0, rng);
        const auto traj = rollout(spec, policy, nullptr, std::move(start), true, rng);
        ok += traj.cause == TerminalCause::Timeout ? 1 : 0;
        ret += traj.discounted_objective(spec.gamma);
      }
      return EvalOutcome{static_cast<double>(ok) / config.success_episodes, ret / config.success_episodes, false};
    };
  };
  SearchConfig search = config.search;

  auto curve_observer = [&](long base, const GaussianDist& node_rho,
                            const std::vector<std::string>& failures) -> IterationObserver {
    if (config.curve_every <= 0 || kind == BaselineKind::NR) return {};
    return [&, base, node_rho, failures](const IterationInfo& info) {
      if (info.iteration % config.curve_every != 0) return;
      PolicySearchResult snap{*info.policy, *info.value, {}};
      const auto g = single_edge_graph(node_rho, snap, failures, 0);
      Rng rng(curve_seed);
      const auto stats = evaluate_graph(g, *task.env, task.rho, config.eval_episodes, exec, rng);
      out.curve.push_back({base + info.samples, stats.mean_return, stats.stderr_, label});
    };
  };

  switch (kind) {
    case BaselineKind::ONE: {
      search.network.policy_hidden = artifacts.hidden_sum;
      const auto spec = make_spec(task.rho);
      auto result = policy_search(spec, std::nullopt, artifacts.total_samples, ranking(spec, "ONE"), search,
                                  derive_seed(seed, "ONE"), curve_observer(0, task.rho, spec.termination.failure_predicates));
      out.samples = result.report.sample_count;
      out.stage_samples.push_back(out.samples);
      out.graph = single_edge_graph(task.rho, result, spec.termination.failure_predicates, out.samples);
      break;
    }
    case BaselineKind::NR: {
      std::vector<PolicySearchResult> results;
      for (std::size_t k = 0; k < artifacts.rhos.size(); ++k) {
        const auto spec = make_spec(artifacts.rhos[k]);
        const std::string stream = "NR/node" + std::to_string(k);
        results.push_back(policy_search(spec, std::nullopt, artifacts.node_samples[k], ranking(spec, stream),
                                        search, derive_seed(seed, stream)));
        out.stage_samples.push_back(results.back().report.sample_count);
        out.samples += out.stage_samples.back();

        RelayGraph g;
        for (std::size_t j = 0; j <= k; ++j) {
          const int n = g.add_node(artifacts.rhos[j], 0, static_cast<int>(j));
          RelayEdge e;
          e.from = n;
          e.to = RelayGraph::kRoot;
          e.policy = std::make_shared<const GaussianPolicy>(results[j].policy);
          e.value = std::make_shared<const ValueFunction>(results[j].value);
          e.failure_predicates = task.base.failure_predicates;
          e.samples = out.stage_samples[j];
          g.add_edge(std::move(e));
        }
        Rng rng(curve_seed);
        const auto stats = evaluate_graph(g, *task.env, task.rho, config.eval_episodes, exec, rng);
        out.curve.push_back({out.samples, stats.mean_return, stats.stderr_, label});
        out.graph = std::move(g);
      }
      break;
    }
    case BaselineKind::CL: {
      std::optional<WarmStart> warm;
      PolicySearchResult last;
      for (std::size_t k = 0; k < artifacts.rhos.size(); ++k) {
        const auto spec = make_spec(artifacts.rhos[k]);
        const std::string stream = "CL/stage" + std::to_string(k);
        if (warm) out.stage_start.push_back(warm->policy);
        last = policy_search(spec, warm, artifacts.node_samples[k], ranking(spec, stream), search,
                             derive_seed(seed, stream),
                             curve_observer(out.samples, task.rho, spec.termination.failure_predicates));
        out.stage_end.push_back(last.policy);
        out.stage_samples.push_back(last.report.sample_count);
        out.samples += last.report.sample_count;
        warm = WarmStart{last.policy, last.value};
      }
      out.graph = single_edge_graph(task.rho, last, task.base.failure_predicates, out.samples);
      break;
    }
  }
  if (kind != BaselineKind::NR) {
    Rng rng(curve_seed);
    const auto stats = evaluate_graph(out.graph, *task.env, task.rho, config.eval_episodes, exec, rng);
    out.curve.push_back({out.samples, stats.mean_return, stats.stderr_, label});
  }
  return out;
}

}  // namespace relaynet
