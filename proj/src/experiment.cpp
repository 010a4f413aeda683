#include "relaynet/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace relaynet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
}

std::vector<std::uint64_t> seeds_for(const ExperimentConfig& config, const CommandOptions& options) {
  return options.seed ? std::vector<std::uint64_t>{*options.seed} : config.seeds;
}

std::string format_event(const RelayEvent& e) {
  std::string line = e.kind + " node " + std::to_string(e.node);
  if (e.edge >= 0) line += " edge " + std::to_string(e.edge);
  line += " vbar " + short_num(e.v_bar) + " samples " + std::to_string(e.samples) + " total " +
          std::to_string(e.total_samples);
  if (e.w > 0.0) line += " w " + short_num(e.w);
  if (e.stalled) line += " stalled";
  if (!e.note.empty()) line += " (" + e.note + ")";
  return line;
}

ExecutionOptions execution_options(const ExperimentConfig& config, const RelayTask& task) {
  ExecutionOptions o;
  o.mode = config.relay.mode;
  o.junction = config.relay.junction;
  o.max_steps = task.base.max_steps;
  o.gamma = task.gamma;
  return o;
}

json summary_json(const TrainOutcome& o) {
  json s = {{"seed", o.seed},
            {"abandoned", o.abandoned},
            {"message", o.message},
            {"nodes", o.run.graph.chain_node_count()},
            {"edges", o.run.graph.edges().size()},
            {"merges", o.run.graph.merges().size()},
            {"total_samples", o.run.total_samples},
            {"succeeded", o.run.succeeded},
            {"chain_samples", o.chain_samples}};
  if (!o.run.curve.empty()) {
    s["final_return"] = o.run.curve.back().mean_return;
    s["final_stderr"] = o.run.curve.back().stderr_;
  }
  return s;
}

void write_outcome(const fs::path& dir, const ExperimentConfig& config, const TrainOutcome& o,
                   const std::vector<CurveRow>& extra_curve = {}) {
  make_dir(dir);
  save_graph((dir / "graph.json").string(), GraphFile{o.run.graph, config.env, to_json(config)});
  auto curve = o.run.curve;
  curve.insert(curve.end(), extra_curve.begin(), extra_curve.end());
  write_text(dir / "curve.csv", curve_csv(curve));
  write_text(dir / "confusion.csv", confusion_csv(o.run.confusion));
  write_text(dir / "events.jsonl", events_jsonl(o.run.events));
  write_text(dir / "merges.csv", merges_csv(o.run.graph.merges()));
  write_text(dir / "summary.json", summary_json(o).dump(2) + "\n");
}

fs::path seed_dir(const fs::path& base, std::uint64_t seed) { return base / ("seed-" + std::to_string(seed)); }

}  // namespace

TrainOutcome train_relay(const ExperimentConfig& config, std::uint64_t seed, const LogSink& log) {
  const RelayTask task = make_task(config);
  TrainOutcome out;
  out.seed = seed;
  RelayEventSink sink;
  if (log) sink = [&](const RelayEvent& e) { log(format_event(e)); };
  try {
    if (config.pipeline == Pipeline::Multichain) {
      auto multi = learn_multi_relay_networks(task, config.chain_seeds, config.epsilon, config.relay, seed, sink);
      out.run = std::move(multi.run);
      out.chain_samples = std::move(multi.chain_samples);
    } else {
      out.run = learn_relay_networks(task, config.relay, seed, sink);
    }
  } catch (const ConstructionAbandoned& e) {
    out.run = e.partial();
    out.abandoned = true;
    out.message = e.what();
    if (log) log("abandoned: " + out.message);
  }
  return out;
}

BaselineRun run_baseline_kind(const ExperimentConfig& config, BaselineKind kind, const RelayArtifacts& artifacts,
                              std::uint64_t seed) {
  return train_baseline(kind, make_task(config), artifacts, config.relay, seed);
}

std::string curve_csv(const std::vector<CurveRow>& rows) {
  std::string out = "samples,mean_return,stderr,label\n";
  for (const auto& r : rows)
    out += std::to_string(r.samples) + "," + num(r.mean_return) + "," + num(r.stderr_) + "," + r.label + "\n";
  return out;
}

std::string confusion_csv(const std::vector<ConfusionRow>& rows) {
  std::string out = "node,tp,fp,fn,tn,phase\n";
  for (const auto& r : rows)
    out += std::to_string(r.node) + "," + std::to_string(r.counts.tp) + "," + std::to_string(r.counts.fp) + "," +
           std::to_string(r.counts.fn) + "," + std::to_string(r.counts.tn) + "," + r.phase + "\n";
  return out;
}

std::string merges_csv(const std::vector<MergeRecord>& merges) {
  std::string out = "merged_from,merged_into,similarity,samples_saved\n";
  for (const auto& m : merges)
    out += std::to_string(m.merged_from) + "," + std::to_string(m.merged_into) + "," + num(m.similarity) + "," +
           std::to_string(m.samples_saved) + "\n";
  return out;
}

std::string events_jsonl(const std::vector<RelayEvent>& events) {
  std::string out;
  for (const auto& e : events) {
    const json j = {{"kind", e.kind},     {"node", e.node},        {"edge", e.edge},
                    {"v_bar", e.v_bar},   {"samples", e.samples},  {"total_samples", e.total_samples},
                    {"w", e.w},           {"stalled", e.stalled},  {"note", e.note}};
    out += j.dump() + "\n";
  }
  return out;
}

void write_manifest(const ExperimentConfig& config, const std::string& command, const CommandOptions& options) {
  const fs::path dir(options.out_dir);
  make_dir(dir);
  ExperimentConfig effective = config;
  effective.seeds = seeds_for(config, options);
  const json manifest = {{"manifest_version", 1},
                         {"tool", "relaynet"},
                         {"library_version", kLibraryVersion},
                         {"graph_format_version", kGraphFormatVersion},
                         {"command", command},
                         {"dry_run", options.dry_run},
                         {"seeds", effective.seeds},
                         {"config", to_json(effective)}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  write_text(dir / "config.json", to_json(effective).dump(2) + "\n");
}

int run_train(const ExperimentConfig& config, const CommandOptions& options) {
  write_manifest(config, "train", options);
  if (options.dry_run) return 0;
  int abandoned = 0;
  for (const auto seed : seeds_for(config, options)) {
    if (options.log) options.log("seed " + std::to_string(seed) + ": training " + to_string(config.pipeline));
    const auto outcome = train_relay(config, seed, options.log);
    std::vector<CurveRow> extra;
    if (outcome.abandoned) {
      ++abandoned;
    } else if (!config.baselines.empty()) {
      const auto artifacts = RelayArtifacts::from_run(outcome.run);
      for (const auto kind : config.baselines) {
        if (options.log) options.log(std::string("seed ") + std::to_string(seed) + ": baseline " + to_string(kind));
        const auto b = run_baseline_kind(config, kind, artifacts, seed);
        extra.insert(extra.end(), b.curve.begin(), b.curve.end());
      }
    }
    write_outcome(seed_dir(options.out_dir, seed), config, outcome, extra);
    if (options.log && !outcome.run.curve.empty())
      options.log("seed " + std::to_string(seed) + ": final return " + short_num(outcome.run.curve.back().mean_return) +
                  " +- " + short_num(outcome.run.curve.back().stderr_) + ", " +
                  std::to_string(outcome.run.graph.chain_node_count()) + " nodes, " +
                  std::to_string(outcome.run.total_samples) + " samples");
  }
  return abandoned;
}

void run_baseline(const ExperimentConfig& config, BaselineKind kind, const std::string& graph_path,
                  const CommandOptions& options) {
  write_manifest(config, std::string("baseline ") + to_string(kind), options);
  if (options.dry_run) return;
  for (const auto seed : seeds_for(config, options)) {
    const fs::path dir = seed_dir(options.out_dir, seed);
    RelayArtifacts artifacts;
    if (!graph_path.empty()) {
      artifacts = RelayArtifacts::from_graph(load_graph(graph_path).graph);
    } else {
      if (options.log) options.log("seed " + std::to_string(seed) + ": training relay for baseline artifacts");
      const auto outcome = train_relay(config, seed, options.log);
      write_outcome(dir, config, outcome);
      if (outcome.abandoned) fail(ErrorCode::ConstructionAbandoned, "relay run abandoned: " + outcome.message);
      artifacts = RelayArtifacts::from_run(outcome.run);
    }
    if (options.log) options.log(std::string("seed ") + std::to_string(seed) + ": baseline " + to_string(kind));
    const auto b = run_baseline_kind(config, kind, artifacts, seed);
    make_dir(dir);
    const std::string stem = std::string("baseline-") + to_string(kind);
    write_text(dir / (stem + ".csv"), curve_csv(b.curve));
    save_graph((dir / (stem + ".graph.json")).string(), GraphFile{b.graph, config.env, to_json(config)});
    if (options.log)
      options.log(std::string("seed ") + std::to_string(seed) + ": " + to_string(kind) + " final return " +
                  short_num(b.curve.back().mean_return) + " +- " + short_num(b.curve.back().stderr_) + ", " +
                  std::to_string(b.samples) + " samples");
  }
}

void run_sweep_alpha(const ExperimentConfig& config, const CommandOptions& options) {
  write_manifest(config, "sweep-alpha", options);
  if (options.dry_run) return;
  const fs::path base(options.out_dir);
  std::string rows = "alpha,seed,samples,nodes,succeeded,final_return,stderr\n";
  std::string summary = "alpha,runs,mean_final_return,stderr\n";
  for (const double alpha : config.alpha_sweep) {
    ExperimentConfig c = config;
    c.relay.alpha = alpha;
    std::vector<double> finals;
    double single_stderr = 0.0;
    for (const auto seed : seeds_for(config, options)) {
      if (options.log) options.log("alpha " + short_num(alpha) + " seed " + std::to_string(seed));
      const auto o = train_relay(c, seed, options.log);
      write_outcome(seed_dir(base / ("alpha-" + short_num(alpha)), seed), c, o);
      const bool scored = !o.run.curve.empty();
      const double ret = scored ? o.run.curve.back().mean_return : std::nan("");
      const double se = scored ? o.run.curve.back().stderr_ : std::nan("");
      rows += num(alpha) + "," + std::to_string(seed) + "," + std::to_string(o.run.total_samples) + "," +
              std::to_string(o.run.graph.chain_node_count()) + "," + (o.run.succeeded ? "1" : "0") + "," + num(ret) +
              "," + num(se) + "\n";
      if (scored) {
        finals.push_back(ret);
        single_stderr = se;
      }
    }
    double mean = std::nan("");
    double se = std::nan("");
    if (!finals.empty()) {
      mean = 0.0;
      for (double f : finals) mean += f;
      mean /= static_cast<double>(finals.size());
      se = finals.size() > 1 ? sample_stderr(finals) : single_stderr;
    }
    summary += num(alpha) + "," + std::to_string(finals.size()) + "," + num(mean) + "," + num(se) + "\n";
  }
  write_text(base / "sweep.csv", rows);
  write_text(base / "sweep_summary.csv", summary);
}

ReturnStats run_eval(const std::string& graph_path, const std::optional<ExperimentConfig>& config,
                     const CommandOptions& options) {
  const GraphFile file = load_graph(graph_path);
  ExperimentConfig c;
  if (config) {
    c = *config;
  } else {
    require(!file.config.is_null(), ErrorCode::Config, "graph file carries no config; pass one");
    c = parse_config(file.config);
  }
  c.env = file.env;
  write_manifest(c, "eval " + graph_path, options);
  if (options.dry_run) return {};
  const RelayTask task = make_task(c);
  const std::uint64_t seed = seeds_for(c, options).front();
  long samples = 0;
  for (const auto& e : file.graph.edges()) samples += e.samples;
  const auto rows = testing_curve({Checkpoint{samples, &file.graph}}, task, c.relay.eval_episodes,
                                  execution_options(c, task), seed, "AUTO");
  Rng rng = make_rng(seed, "curve");
  const auto stats = evaluate_graph(file.graph, *task.env, task.rho, c.relay.eval_episodes,
                                    execution_options(c, task), rng);
  write_text(fs::path(options.out_dir) / "eval.csv", curve_csv(rows));
  if (options.log)
    options.log("mean return " + short_num(stats.mean_return) + " +- " + short_num(stats.stderr_) + ", success rate " +
                short_num(stats.success_rate));
  return stats;
}

std::string inspect_graph(const GraphFile& file) {
  const RelayGraph& g = file.graph;
  std::ostringstream out;
  out << "environment " << file.env.name << "\n";
  out << g.chain_node_count() << " nodes, " << g.edges().size() << " edges, " << g.merges().size() << " merges\n";
  for (const auto& n : g.nodes()) {
    if (!n.rho) continue;
    out << "node " << n.id << " chain " << n.chain << " index " << n.chain_index << " mean [";
    for (std::size_t i = 0; i < n.rho->mean.size(); ++i) out << (i ? ", " : "") << short_num(n.rho->mean[i]);
    out << "] var [";
    for (std::size_t i = 0; i < n.rho->variance.size(); ++i) out << (i ? ", " : "") << short_num(n.rho->variance[i]);
    out << "]\n";
  }
  for (std::size_t i = 0; i < g.edges().size(); ++i) {
    const auto& e = g.edges()[i];
    out << "edge " << i << ": " << e.from << " -> " << e.to << " vbar " << short_num(e.threshold) << " alpha "
        << short_num(e.alpha) << " samples " << e.samples << " holdout acc "
        << short_num(e.report.holdout.accuracy());
    if (e.refined) out << " refined acc " << short_num(e.refined->holdout.accuracy());
    if (!e.report.warning.empty()) out << " warning: " << e.report.warning;
    out << "\n";
  }
  for (const auto& m : g.merges())
    out << "merge " << m.merged_from << " -> " << m.merged_into << " similarity " << short_num(m.similarity)
        << " saved " << m.samples_saved << "\n";
  return out.str();
}

}  // namespace relaynet
