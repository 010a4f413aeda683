#include "relaynet/relay_graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "relaynet/error.hpp"
#include "relaynet/runtime.hpp"

namespace relaynet {

RelayGraph::RelayGraph() { nodes_.push_back(RelayNode{kRoot, std::nullopt, -1, -1}); }

int RelayGraph::add_node(GaussianDist rho, int chain, int chain_index) {
  rho.validate();
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(RelayNode{id, std::move(rho), chain, chain_index});
  return id;
}

const RelayNode& RelayGraph::node(int id) const {
  require(id >= 0 && id < static_cast<int>(nodes_.size()), ErrorCode::InvalidArgument, "unknown node id");
  return nodes_[static_cast<std::size_t>(id)];
}

const RelayEdge& RelayGraph::edge(int index) const {
  require(index >= 0 && index < static_cast<int>(edges_.size()), ErrorCode::InvalidArgument, "unknown edge index");
  return edges_[static_cast<std::size_t>(index)];
}

std::vector<int> RelayGraph::out_edges(int node) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < edges_.size(); ++i)
    if (edges_[i].from == node) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<int> RelayGraph::ancestors(int start) const {
  std::vector<bool> seen(nodes_.size(), false);
  std::vector<int> stack{start};
  std::vector<int> out;
  while (!stack.empty()) {
    const int n = stack.back();
    stack.pop_back();
    for (const auto& e : edges_) {
      if (e.from != n || seen[static_cast<std::size_t>(e.to)]) continue;
      seen[static_cast<std::size_t>(e.to)] = true;
      out.push_back(e.to);
      stack.push_back(e.to);
    }
  }
  return out;
}

bool RelayGraph::reaches_root(int node) const {
  if (node == kRoot) return true;
  const auto up = ancestors(node);
  return std::find(up.begin(), up.end(), kRoot) != up.end();
}

int RelayGraph::add_edge(RelayEdge edge) {
  const int n = static_cast<int>(nodes_.size());
  require(edge.from > 0 && edge.from < n, ErrorCode::InvalidArgument, "edge source must be a chain node");
  require(edge.to >= 0 && edge.to < n, ErrorCode::InvalidArgument, "edge target does not exist");
  require(edge.from != edge.to, ErrorCode::InvalidArgument, "self edges are not allowed");
  require(edge.policy && edge.value, ErrorCode::InvalidArgument, "edge needs a policy and a value function");
  require(std::isfinite(edge.threshold), ErrorCode::Numeric, "edge threshold must be finite");
  require(out_edges(edge.from).size() < 2, ErrorCode::InvalidArgument, "a node has at most two outgoing edges");
  const auto up = ancestors(edge.to);
  require(std::find(up.begin(), up.end(), edge.from) == up.end(), ErrorCode::InvalidArgument,
          "edge would create a cycle");
  edges_.push_back(std::move(edge));
  return static_cast<int>(edges_.size()) - 1;
}

void RelayGraph::add_merge(MergeRecord merge) { merges_.push_back(merge); }

void RelayGraph::validate() const {
  for (const auto& node : nodes_) {
    if (node.id == kRoot) {
      require(!node.rho.has_value(), ErrorCode::Corrupt, "dummy root carries a distribution");
      continue;
    }
    require(node.rho.has_value(), ErrorCode::Corrupt, "chain node without a distribution");
    const auto out = out_edges(node.id);
    require(out.size() <= 2, ErrorCode::Corrupt, "node has more than two outgoing edges");
  }
  for (const auto& e : edges_) {
    require(e.policy && e.value && std::isfinite(e.threshold), ErrorCode::Corrupt, "incomplete edge");
    const auto up = ancestors(e.to);
    require(std::find(up.begin(), up.end(), e.from) == up.end(), ErrorCode::Corrupt, "graph has a cycle");
  }
}

TerminationSet augment_termination(const TerminationSet& base, std::shared_ptr<const ValueFunction> vf,
                                   double threshold) {
  TerminationSet out = base;
  out.value_threshold = ValueThreshold{std::move(vf), threshold};
  return out;
}

namespace {

double squared_norm(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return acc;
}

}  // namespace

InitialMeanResult next_initial_mean(const InitialMeanProblem& problem, std::span<const double> prev_mean,
                                    const InitialMeanConfig& config) {
  require(problem.value != nullptr, ErrorCode::MissingValueFunction, "initial-mean problem has no value");
  require(problem.w >= 0.0 && std::isfinite(problem.w), ErrorCode::InvalidArgument, "w must be non-negative");
  require(prev_mean.size() == problem.target.size(), ErrorCode::Dimension, "mean dimension mismatch");
  const std::size_t n = prev_mean.size();

  auto diff = [&](std::span<const double> s) {
    if (problem.difference) return problem.difference(s, problem.target);
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = s[i] - problem.target[i];
    return d;
  };
  auto feasible = [&](std::span<const double> s) { return !problem.feasible || problem.feasible(s); };
  std::vector<double> scratch(n);
  auto value = [&](std::span<const double> s) { return problem.value(s, scratch); };
  auto objective = [&](std::span<const double> s, double v) { return v + problem.w * squared_norm(diff(s)); };
  auto projected = [&](std::vector<double> s) {
    if (problem.project) problem.project(s);
    return s;
  };

  std::vector<double> s(prev_mean.begin(), prev_mean.end());
  std::vector<double> grad_v(n);
  double v = problem.value(s, grad_v);
  require(std::isfinite(v), ErrorCode::Numeric, "value is not finite at the previous mean");
  require(v >= problem.threshold && feasible(s), ErrorCode::InfeasibleDistribution,
          "previous mean violates the value or state constraint");

  InitialMeanResult result;
  double f = objective(s, v);
  double step = config.initial_step;
  bool on_boundary = false;
  int accepted = 0;
  bool nonzero_gradient = false;
  for (int it = 0; it < config.max_iterations && step >= config.min_step; ++it) {
    result.iterations = it + 1;
    const auto d = diff(s);
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = grad_v[i] + 2.0 * problem.w * d[i];
    // On the value boundary, drop the component that would lower V further.
    const double gv = std::inner_product(g.begin(), g.end(), grad_v.begin(), 0.0);
    const double vv = squared_norm(grad_v);
    if (on_boundary && gv > 0.0 && vv > 0.0)
      for (std::size_t i = 0; i < n; ++i) g[i] -= gv / vv * grad_v[i];
    const double gnorm = std::sqrt(squared_norm(g));
    if (!(gnorm > 0.0)) break;
    nonzero_gradient = true;

    std::vector<double> delta(n);
    for (std::size_t i = 0; i < n; ++i) delta[i] = -step * g[i] / gnorm;
    auto at = [&](double tau) {
      std::vector<double> p(n);
      for (std::size_t i = 0; i < n; ++i) p[i] = s[i] + tau * delta[i];
      return projected(std::move(p));
    };
    auto cand = at(1.0);
    double cv = value(cand);
    bool truncated = false;
    if (on_boundary && !(cv >= problem.threshold) && std::isfinite(cv)) {
      // Newton steps along grad V back onto the level set.
      std::vector<double> r = cand;
      std::vector<double> gr(n);
      for (int k = 0; k < 8; ++k) {
        const double rv = problem.value(r, gr);
        const double gg = squared_norm(gr);
        if (!std::isfinite(rv) || !(gg > 0.0)) break;
        if (rv >= problem.threshold) break;
        const double scale = (problem.threshold - rv) / gg + 1e-12 / std::sqrt(gg);
        for (std::size_t i = 0; i < n; ++i) r[i] += scale * gr[i];
        r = projected(std::move(r));
      }
      const double rv = value(r);
      if (rv >= problem.threshold && feasible(r)) {
        cand = std::move(r);
        cv = rv;
        truncated = true;
      }
    }
    if (!(cv >= problem.threshold) || !feasible(cand)) {
      // Back along the segment to the last feasible point.
      double lo = 0.0;
      double hi = 1.0;
      for (int b = 0; b < 60; ++b) {
        const double mid = 0.5 * (lo + hi);
        const auto p = at(mid);
        if (value(p) >= problem.threshold && feasible(p))
          lo = mid;
        else
          hi = mid;
      }
      cand = at(lo);
      cv = value(cand);
      truncated = true;
      if (lo == 0.0 || !(cv >= problem.threshold) || !feasible(cand)) {
        on_boundary = true;
        step *= 0.5;
        continue;
      }
    }
    const double cf = objective(cand, cv);
    if (cf < f) {
      const double gain = f - cf;
      s = std::move(cand);
      v = problem.value(s, grad_v);
      f = cf;
      ++accepted;
      on_boundary = truncated;
      step = truncated ? step : step * 1.5;
      if (gain <= config.tolerance * (1.0 + std::abs(f))) step *= 0.5;
    } else {
      step *= 0.5;
    }
  }
  result.mean = s;
  result.objective = f;
  result.stalled = nonzero_gradient && accepted == 0;
  return result;
}

InitialMeanResult next_initial_mean(const ValueFunction& vf, double threshold, std::span<const double> target,
                                    std::span<const double> prev_mean, double w, const Environment& env,
                                    const InitialMeanConfig& config) {
  InitialMeanProblem problem;
  problem.value = [&vf](std::span<const double> s, std::span<double> g) { return vf.value_and_gradient(s, g); };
  problem.threshold = threshold;
  problem.target.assign(target.begin(), target.end());
  problem.w = w;
  problem.project = [&env](std::span<double> s) { env.project_feasible(s); };
  problem.difference = [&env](std::span<const double> a, std::span<const double> b) { return env.difference(a, b); };
  problem.feasible = [&env](std::span<const double> s) { return env.constraint(s) >= 0.0; };
  return next_initial_mean(problem, prev_mean, config);
}

namespace {

double median(std::vector<double> v) {
  require(!v.empty(), ErrorCode::InvalidArgument, "median of nothing");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace

double choose_w(std::span<const double> values, std::span<const double> squared_distances) {
  require(!values.empty() && values.size() == squared_distances.size(), ErrorCode::InvalidArgument,
          "choose_w needs paired samples");
  std::vector<double> mags;
  for (double v : values) mags.push_back(std::abs(v));
  const double den = median({squared_distances.begin(), squared_distances.end()});
  if (!(den > 0.0)) return 1.0;
  return median(std::move(mags)) / den;
}

double choose_w(const ValueFunction& vf, const GaussianDist& rho_prev, std::span<const double> target,
                const Environment& env, int samples, Rng& rng) {
  require(samples >= 1, ErrorCode::InvalidArgument, "choose_w needs at least one sample");
  ValueEvaluator v(vf);
  std::vector<double> values;
  std::vector<double> dist;
  for (int i = 0; i < samples; ++i) {
    const auto s = sample_initial(env, rho_prev, 1.0, rng);
    values.push_back(v(s));
    dist.push_back(env.squared_distance(s, target));
  }
  return choose_w(values, dist);
}

TerminationSet RelayTask::root_termination() const {
  TerminationSet t = base;
  for (const auto& name : root_failures)
    if (std::find(t.failure_predicates.begin(), t.failure_predicates.end(), name) == t.failure_predicates.end())
      t.failure_predicates.push_back(name);
  return t;
}

void RelayTask::validate() const {
  require(env != nullptr, ErrorCode::InvalidArgument, "task has no environment");
  rho.validate();
  rho0.validate();
  const std::size_t n = env->spec().state_size;
  require(rho.dim() == n && rho0.dim() == n, ErrorCode::Dimension, "task distributions do not match the state");
  require(base.max_steps >= 1, ErrorCode::InvalidArgument, "max_steps must be at least 1");
  require(!base.value_threshold.has_value(), ErrorCode::InvalidArgument, "base termination has a value predicate");
  const auto known = env->failure_predicate_names();
  auto check = [&](const std::string& name) {
    require(std::find(known.begin(), known.end(), name) != known.end(), ErrorCode::InvalidArgument,
            "unknown failure predicate: " + name);
  };
  for (const auto& p : base.failure_predicates) check(p);
  for (const auto& p : root_failures) check(p);
  require(gamma > 0.0 && gamma < 1.0, ErrorCode::InvalidArgument, "gamma must lie in (0, 1)");
}

ConstructionAbandoned::ConstructionAbandoned(std::string message, RelayRun partial)
    : Error(ErrorCode::ConstructionAbandoned, message), partial_(std::make_shared<RelayRun>(std::move(partial))) {}

namespace {

ExecutionOptions execution_options(const RelayTask& task, const RelayConfig& config) {
  ExecutionOptions o;
  o.mode = config.mode;
  o.junction = config.junction;
  o.max_steps = task.base.max_steps;
  o.deterministic = true;
  o.gamma = task.gamma;
  return o;
}

void emit(ChainContext& ctx, RelayEvent event) {
  event.total_samples = ctx.run->total_samples;
  if (ctx.sink) ctx.sink(event);
  ctx.run->events.push_back(std::move(event));
}

}  // namespace

double graph_success_rate(const RelayGraph& graph, const RelayTask& task, const GaussianDist& dist, int episodes,
                          ExecutionMode mode, JunctionChoice junction, Rng& rng) {
  RelayConfig c;
  c.mode = mode;
  c.junction = junction;
  return evaluate_graph(graph, *task.env, dist, episodes, execution_options(task, c), rng).success_rate;
}

int train_edge(ChainContext& ctx, int from, int to, const std::string& stream, const RelayEvent* proposal) {
  const RelayTask& task = *ctx.task;
  const RelayConfig& config = *ctx.config;
  RelayRun& run = *ctx.run;
  const RelayNode& node = run.graph.node(from);

  SubtaskSpec spec;
  spec.env = task.env;
  spec.rho = *node.rho;
  spec.gamma = task.gamma;
  SubtaskSpec calib_spec;
  std::vector<std::string> failures;
  if (to == RelayGraph::kRoot) {
    spec.termination = task.root_termination();
    spec.objective = RootObjective{};
    calib_spec = spec;
  } else {
    const auto parents = run.graph.out_edges(to);
    require(!parents.empty(), ErrorCode::InvalidArgument, "relay target has no outgoing edge");
    const RelayEdge& parent = run.graph.edge(parents.front());
    spec.termination = augment_termination(task.base, parent.value, parent.threshold);
    spec.objective = RelayObjective{parent.value, parent.threshold, config.alpha};
    calib_spec = spec;
    calib_spec.termination = task.base;
  }

  const long remaining = config.total_budget - run.total_samples;
  if (remaining <= 0) throw ConstructionAbandoned("total sample budget exhausted", run);
  const long budget = std::min(config.node_budget, remaining);

  const ExecutionOptions exec = execution_options(task, config);
  auto candidate = [&](const GaussianPolicy& policy, const ValueFunction& vf) {
    RelayGraph g = run.graph;
    RelayEdge e;
    e.from = from;
    e.to = to;
    e.policy = std::make_shared<const GaussianPolicy>(policy);
    e.value = std::make_shared<const ValueFunction>(vf);
    e.threshold = std::numeric_limits<double>::max();
    e.failure_predicates = spec.termination.failure_predicates;
    g.add_edge(std::move(e));
    return g;
  };

  SuccessCriterion success;
  if (to == RelayGraph::kRoot) {
    success = [&, eval_seed = derive_seed(ctx.seed, stream + "/success")](const GaussianPolicy& policy,
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
      const double rate = static_cast<double>(ok) / config.success_episodes;
      return EvalOutcome{rate, ret / config.success_episodes, rate >= config.success_rate};
    };
  } else {
    success = [&, eval_seed = derive_seed(ctx.seed, stream + "/success")](const GaussianPolicy& policy,
                                                                         const ValueFunction& vf) {
      Rng rng(eval_seed);
      const auto g = candidate(policy, vf);
      ExecutionOptions forced = exec;
      forced.start_edge = static_cast<int>(g.edges().size()) - 1;
      const auto stats = evaluate_graph(g, *task.env, spec.rho, config.success_episodes, forced, rng);
      return EvalOutcome{stats.success_rate, stats.mean_return, stats.success_rate >= config.success_rate};
    };
  }

  IterationObserver observer;
  if (config.curve_every > 0) {
    observer = [&, base = run.total_samples, curve_seed = derive_seed(ctx.seed, "curve")](const IterationInfo& info) {
      if (info.iteration % config.curve_every != 0) return;
      Rng rng(curve_seed);
      const auto g = candidate(*info.policy, *info.value);
      const auto stats = evaluate_graph(g, *task.env, task.rho, config.eval_episodes, exec, rng);
      run.curve.push_back({base + info.samples, stats.mean_return, stats.stderr_, "AUTO"});
    };
  }

  auto result = policy_search(spec, std::nullopt, budget, success, config.search, derive_seed(ctx.seed, stream),
                              observer);
  run.total_samples += result.report.sample_count;

  Rng calib_rng = make_rng(ctx.seed, stream + "/threshold");
  CalibrationSet calib;
  auto report = compute_threshold(result.policy, result.value, calib_spec, config.calibration_rollouts,
                                  config.holdout_fraction, calib_rng, &calib);

  RelayEdge edge;
  edge.from = from;
  edge.to = to;
  edge.policy = std::make_shared<const GaussianPolicy>(result.policy);
  edge.failure_predicates = spec.termination.failure_predicates;
  edge.alpha = to == RelayGraph::kRoot ? 0.0 : config.alpha;
  edge.samples = result.report.sample_count;
  run.confusion.push_back({from, report.holdout, "post-train"});
  if (config.refine) {
    Rng refine_rng = make_rng(ctx.seed, stream + "/refine");
    auto refined = refine_value_fn(result.value, result.policy, calib_spec, calib, config.holdout_fraction,
                                   config.refine_config, refine_rng);
    edge.value = std::make_shared<const ValueFunction>(std::move(refined.value));
    edge.threshold = refined.after.v_bar;
    edge.refined = refined.after;
    run.confusion.push_back({from, refined.after.holdout, "post-refine"});
  } else {
    edge.value = std::make_shared<const ValueFunction>(std::move(result.value));
    edge.threshold = report.v_bar;
  }
  edge.report = std::move(report);

  RelayEvent event;
  event.kind = "node_added";
  event.node = from;
  event.v_bar = edge.threshold;
  event.samples = edge.samples;
  event.note = edge.report.warning;
  if (!result.report.succeeded) event.note += event.note.empty() ? "budget spent before success" : "; budget spent";
  if (proposal) {
    event.w = proposal->w;
    event.stalled = proposal->stalled;
    if (!proposal->note.empty()) event.note += (event.note.empty() ? "" : "; ") + proposal->note;
  }
  event.edge = run.graph.add_edge(std::move(edge));
  emit(ctx, event);
  return event.edge;
}

GaussianDist propose_next(ChainContext& ctx, int node, const std::string& stream, RelayEvent& event) {
  const RelayTask& task = *ctx.task;
  const RelayConfig& config = *ctx.config;
  const RelayGraph& graph = ctx.run->graph;
  const auto out = graph.out_edges(node);
  require(!out.empty(), ErrorCode::InvalidArgument, "node has no trained edge");
  const RelayEdge& edge = graph.edge(out.front());
  const GaussianDist& rho = *graph.node(node).rho;
  const Environment& env = *task.env;
  Rng rng = make_rng(ctx.seed, stream + "/eq2");

  std::vector<double> start = rho.mean;
  env.project_feasible(start);
  ValueEvaluator v(*edge.value);
  if (!(v(start) >= edge.threshold)) {
    // The mean itself is predicted bad; start from the nearest sampled good state.
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> pick;
    for (int i = 0; i < 20 * config.w_samples; ++i) {
      auto s = sample_initial(env, rho, 1.5, rng);
      if (!(v(s) >= edge.threshold)) continue;
      const double d = env.squared_distance(s, rho.mean);
      if (d < best) {
        best = d;
        pick = std::move(s);
      }
    }
    require(!pick.empty(), ErrorCode::InfeasibleDistribution, "no state near the node satisfies its threshold");
    start = std::move(pick);
    event.note = "previous mean below threshold; started from a sampled good state";
  }
  event.w = choose_w(*edge.value, rho, task.rho.mean, env, config.w_samples, rng);
  const auto sol = next_initial_mean(*edge.value, edge.threshold, task.rho.mean, start, event.w, env, config.eq2);
  event.stalled = sol.stalled;
  return GaussianDist{sol.mean, rho.variance};
}

RelayGraph chain_subgraph(const RelayGraph& graph, int chain) {
  RelayGraph sub;
  std::vector<int> remap(graph.nodes().size(), -1);
  remap[RelayGraph::kRoot] = RelayGraph::kRoot;
  for (const auto& n : graph.nodes())
    if (n.id != RelayGraph::kRoot && n.chain == chain)
      remap[static_cast<std::size_t>(n.id)] = sub.add_node(*n.rho, n.chain, n.chain_index);
  for (const auto& e : graph.edges()) {
    const int from = remap[static_cast<std::size_t>(e.from)];
    const int to = remap[static_cast<std::size_t>(e.to)];
    if (from < 0 || to < 0) continue;
    RelayEdge copy = e;
    copy.from = from;
    copy.to = to;
    sub.add_edge(std::move(copy));
  }
  return sub;
}

bool grow_chain(ChainContext& ctx, int chain, const GaussianDist& rho0, const ProposalHook& hook) {
  const RelayTask& task = *ctx.task;
  const RelayConfig& config = *ctx.config;
  RelayRun& run = *ctx.run;
  const std::string prefix = "chain" + std::to_string(chain);
  int tip = run.graph.add_node(rho0, chain, 0);
  train_edge(ctx, tip, RelayGraph::kRoot, prefix + "/node0");
  for (int k = 0;; ++k) {
    Rng check = make_rng(ctx.seed, prefix + "/check" + std::to_string(k));
    if (graph_success_rate(chain_subgraph(run.graph, chain), task, task.rho, config.success_episodes, config.mode,
                           config.junction, check) >= config.success_rate)
      return true;
    if (k + 1 >= config.chain_cap)
      throw ConstructionAbandoned("chain reached the length cap without solving the task", run);
    const std::string stream = prefix + "/node" + std::to_string(k + 1);
    RelayEvent proposal;
    auto next = propose_next(ctx, tip, stream, proposal);
    if (hook && hook(ctx, tip, next, proposal)) return true;
    const int child = run.graph.add_node(std::move(next), chain, k + 1);
    train_edge(ctx, child, tip, stream, &proposal);
    tip = child;
  }
}

void append_final_curve(ChainContext& ctx) {
  auto& rows = ctx.run->curve;
  if (!rows.empty() && rows.back().label == "AUTO" && rows.back().samples == ctx.run->total_samples) return;
  const RelayTask& task = *ctx.task;
  Rng curve = make_rng(ctx.seed, "curve");
  const auto stats = evaluate_graph(ctx.run->graph, *task.env, task.rho, ctx.config->eval_episodes,
                                    execution_options(task, *ctx.config), curve);
  ctx.run->curve.push_back({ctx.run->total_samples, stats.mean_return, stats.stderr_, "AUTO"});
}

RelayRun learn_relay_networks(const RelayTask& task, const RelayConfig& config, std::uint64_t seed,
                              const RelayEventSink& sink) {
  task.validate();
  require(config.chain_cap >= 1, ErrorCode::InvalidArgument, "chain cap must be at least 1");
  RelayRun run;
  ChainContext ctx{&task, &config, seed, &run, sink};
  try {
    run.succeeded = grow_chain(ctx, 0, task.rho0);
    append_final_curve(ctx);
  } catch (const Error& e) {
    if (!run.graph.edges().empty()) append_final_curve(ctx);
    if (e.code() == ErrorCode::ConstructionAbandoned) throw ConstructionAbandoned(e.what(), run);
    throw ConstructionAbandoned(std::string("chain construction failed: ") + e.what(), run);
  }
  return run;
}

}  // namespace relaynet
