#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "relaynet/config.hpp"
#include "relaynet/graph_io.hpp"
#include "relaynet/multichain.hpp"

namespace relaynet {

inline constexpr const char* kLibraryVersion = "0.1.0";

using LogSink = std::function<void(const std::string&)>;

/// Outcome of one relay (or multichain) construction for one seed. When the
/// construction was abandoned `run` holds the partial graph.
struct TrainOutcome {
  std::uint64_t seed = 0;
  RelayRun run;
  std::vector<long> chain_samples;  // multichain only
  bool abandoned = false;
  std::string message;
};

TrainOutcome train_relay(const ExperimentConfig& config, std::uint64_t seed, const LogSink& log = {});

/// The last curve row of a baseline is scored from rho with the same start
/// states as the relay curve.
BaselineRun run_baseline_kind(const ExperimentConfig& config, BaselineKind kind, const RelayArtifacts& artifacts,
                              std::uint64_t seed);

// CSV writers. Doubles are printed with 17 significant digits.
std::string curve_csv(const std::vector<CurveRow>& rows);
std::string confusion_csv(const std::vector<ConfusionRow>& rows);
std::string merges_csv(const std::vector<MergeRecord>& merges);
std::string events_jsonl(const std::vector<RelayEvent>& events);

struct CommandOptions {
  std::string out_dir = "out";
  bool dry_run = false;
  std::optional<std::uint64_t> seed;  // replaces the config's seed list
  LogSink log;
};

/// train: per seed, seed-<s>/ holds graph.json, curve.csv, confusion.csv,
/// events.jsonl and merges.csv. Baselines listed in the config run after
/// the relay and append to curve.csv. Returns the number of abandoned seeds.
int run_train(const ExperimentConfig& config, const CommandOptions& options);
/// baseline: artifacts come from `graph_path` when given, otherwise a relay
/// run is trained first.
void run_baseline(const ExperimentConfig& config, BaselineKind kind, const std::string& graph_path,
                  const CommandOptions& options);
/// sweep-alpha: alpha-<a>/seed-<s>/ per run plus sweep.csv and sweep_summary.csv.
void run_sweep_alpha(const ExperimentConfig& config, const CommandOptions& options);
/// eval: one testing-curve row for a saved graph. Without a config the
/// snapshot stored in the graph file supplies rho and the termination set.
ReturnStats run_eval(const std::string& graph_path, const std::optional<ExperimentConfig>& config,
                     const CommandOptions& options);
std::string inspect_graph(const GraphFile& file);

/// Writes manifest.json (command, seeds, versions, config) and config.json.
void write_manifest(const ExperimentConfig& config, const std::string& command, const CommandOptions& options);

}  // namespace relaynet
