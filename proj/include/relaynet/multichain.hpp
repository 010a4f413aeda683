#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "relaynet/relay_graph.hpp"

namespace relaynet {

inline constexpr double kVarianceFloor = 1e-8;

/// Symmetric KL divergence 0.5 (KL(a|b) + KL(b|a)) between diagonal
/// Gaussians. With an environment, mean differences on periodic coordinates
/// are wrapped.
double distribution_similarity(const GaussianDist& a, const GaussianDist& b, const Environment* env = nullptr);

struct RegistryEntry {
  int node = 0;
  int chain = 0;
  GaussianDist rho;
};

struct RegistryMatch {
  RegistryEntry entry;
  double similarity = 0.0;
};

/// Nodes of finished chains, searched for merge targets.
class ChainRegistry {
 public:
  explicit ChainRegistry(double epsilon);

  void add_chain(const RelayGraph& graph, int chain);
  /// Closest entry with similarity < epsilon outside `current_chain`.
  std::optional<RegistryMatch> lookup(const GaussianDist& dist, int current_chain, const Environment* env) const;

  double epsilon() const noexcept { return epsilon_; }
  const std::vector<RegistryEntry>& entries() const noexcept { return entries_; }

 private:
  double epsilon_;
  std::vector<RegistryEntry> entries_;
};

/// Samples of the matched chain's nodes beyond the merge point, i.e. the
/// nodes the growing chain no longer has to build. `budget` maps node id to
/// training samples.
long estimate_merge_savings(const RelayGraph& graph, const MergeRecord& merge, const std::map<int, long>& budget);
/// Same, with the samples recorded on each node's edge.
long estimate_merge_savings(const RelayGraph& graph, const MergeRecord& merge);

struct MultiRelayRun {
  RelayRun run;
  std::vector<long> chain_samples;
  std::vector<bool> chain_solved;
};

MultiRelayRun learn_multi_relay_networks(const RelayTask& task, const std::vector<GaussianDist>& seeds,
                                         double epsilon, const RelayConfig& config, std::uint64_t seed,
                                         const RelayEventSink& sink = {});

}  // namespace relaynet
