#include "relaynet/multichain.hpp"

#include <algorithm>
#include <cmath>

#include "relaynet/error.hpp"

namespace relaynet {

double distribution_similarity(const GaussianDist& a, const GaussianDist& b, const Environment* env) {
  a.validate();
  b.validate();
  require(a.dim() == b.dim(), ErrorCode::Dimension, "distributions differ in dimension");
  if (env) require(env->spec().state_size == a.dim(), ErrorCode::Dimension, "distribution does not match the state");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double va = std::max(a.variance[i], kVarianceFloor);
    const double vb = std::max(b.variance[i], kVarianceFloor);
    double d = a.mean[i] - b.mean[i];
    if (env && env->spec().periodic[i]) d = wrap_angle(d);
    acc += 0.5 * (va / vb + vb / va - 2.0 + d * d * (1.0 / va + 1.0 / vb));
  }
  return 0.5 * acc;
}

ChainRegistry::ChainRegistry(double epsilon) : epsilon_(epsilon) {
  require(epsilon >= 0.0 && !std::isnan(epsilon), ErrorCode::InvalidArgument, "merge epsilon must be >= 0");
}

void ChainRegistry::add_chain(const RelayGraph& graph, int chain) {
  for (const auto& n : graph.nodes())
    if (n.id != RelayGraph::kRoot && n.chain == chain) entries_.push_back({n.id, n.chain, *n.rho});
}

std::optional<RegistryMatch> ChainRegistry::lookup(const GaussianDist& dist, int current_chain,
                                                   const Environment* env) const {
  std::optional<RegistryMatch> best;
  for (const auto& e : entries_) {
    if (e.chain == current_chain) continue;
    const double sim = distribution_similarity(dist, e.rho, env);
    if (sim < epsilon_ && (!best || sim < best->similarity)) best = RegistryMatch{e, sim};
  }
  return best;
}

long estimate_merge_savings(const RelayGraph& graph, const MergeRecord& merge, const std::map<int, long>& budget) {
  const RelayNode& junction = graph.node(merge.merged_from);
  long saved = 0;
  for (const auto& n : graph.nodes()) {
    if (n.id == RelayGraph::kRoot || n.chain != junction.chain || n.chain_index <= junction.chain_index) continue;
    const auto it = budget.find(n.id);
    if (it != budget.end()) saved += it->second;
  }
  return saved;
}

long estimate_merge_savings(const RelayGraph& graph, const MergeRecord& merge) {
  std::map<int, long> budget;
  for (const auto& e : graph.edges()) {
    const RelayNode& from = graph.node(e.from);
    // Only the edge that belongs to the node's own chain counts.
    if (e.to != RelayGraph::kRoot && graph.node(e.to).chain != from.chain) continue;
    budget[e.from] += e.samples;
  }
  return estimate_merge_savings(graph, merge, budget);
}

MultiRelayRun learn_multi_relay_networks(const RelayTask& task, const std::vector<GaussianDist>& seeds,
                                         double epsilon, const RelayConfig& config, std::uint64_t seed,
                                         const RelayEventSink& sink) {
  task.validate();
  require(!seeds.empty(), ErrorCode::InvalidArgument, "multichain construction needs at least one seed");
  for (const auto& s : seeds) {
    s.validate();
    require(s.dim() == task.env->spec().state_size, ErrorCode::Dimension, "seed does not match the state");
  }
  MultiRelayRun out;
  ChainRegistry registry(epsilon);
  ChainContext ctx{&task, &config, seed, &out.run, sink};
  RelayRun& run = out.run;

  try {
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      const int chain = static_cast<int>(i);
      const long before = run.total_samples;
      ProposalHook hook = [&](ChainContext& c, int tip, const GaussianDist& proposal, RelayEvent& info) {
        const auto match = registry.lookup(proposal, chain, task.env.get());
        if (!match) return false;
        const std::string stream = "chain" + std::to_string(chain) + "/junction";
        info.note += (info.note.empty() ? "" : "; ") + std::string("junction edge");
        train_edge(c, match->entry.node, tip, stream, &info);
        MergeRecord merge{match->entry.node, tip, match->similarity, 0};
        merge.samples_saved = estimate_merge_savings(run.graph, merge);
        run.graph.add_merge(merge);
        RelayEvent event;
        event.kind = "merge";
        event.node = match->entry.node;
        event.edge = static_cast<int>(run.graph.edges().size()) - 1;
        event.total_samples = run.total_samples;
        event.note = "merged into node " + std::to_string(tip) + ", similarity " + std::to_string(match->similarity);
        if (c.sink) c.sink(event);
        run.events.push_back(event);
        return true;
      };
      const bool solved = grow_chain(ctx, chain, seeds[i], i == 0 ? ProposalHook{} : hook);
      out.chain_solved.push_back(solved);
      out.chain_samples.push_back(run.total_samples - before);
      registry.add_chain(run.graph, chain);
    }
    run.succeeded = std::all_of(out.chain_solved.begin(), out.chain_solved.end(), [](bool b) { return b; });
    append_final_curve(ctx);
  } catch (const Error& e) {
    if (!run.graph.edges().empty()) append_final_curve(ctx);
    if (e.code() == ErrorCode::ConstructionAbandoned) throw ConstructionAbandoned(e.what(), run);
    throw ConstructionAbandoned(std::string("multichain construction failed: ") + e.what(), run);
  }
  return out;
}

}  // namespace relaynet
