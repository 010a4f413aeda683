#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "relaynet.h"

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  bool dry_run = false;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
  auto* opt = cmd->add_option("--config", c.config, "experiment config (JSON) or a manifest.json");
  if (config_required) opt->required()->check(CLI::ExistingFile);
  else opt->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "run this seed instead of the config's seed list");
  cmd->add_option("--out-dir", c.out_dir, "output directory")->capture_default_str();
  cmd->add_flag("--dry-run", c.dry_run, "validate the config and write the manifest only");
}

int report(rn_status status) {
  if (status == RN_OK) return 0;
  std::fprintf(stderr, "error (%s): %s\n", rn_status_string(status), rn_last_error());
  return 1;
}

void print_line(const char* line, void*) {
  std::printf("%s\n", line);
  std::fflush(stdout);
}

class ConfigHandle {
 public:
  ~ConfigHandle() { rn_config_free(ptr_); }
  rn_status load(const std::string& path) { return rn_config_load(path.c_str(), &ptr_); }
  const rn_config* get() const { return ptr_; }

 private:
  rn_config* ptr_ = nullptr;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relay network training and evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", rn_version());

  Common train_opts, baseline_opts, eval_opts, sweep_opts;
  auto* train = app.add_subcommand("train", "build a relay graph (single chain or multichain)");
  add_common(train, train_opts, true);

  auto* baseline = app.add_subcommand("baseline", "train a ONE, NR or CL baseline with matched budgets");
  add_common(baseline, baseline_opts, true);
  std::string kind;
  std::string baseline_graph;
  baseline->add_option("kind", kind, "ONE, NR or CL")->required()->check(CLI::IsMember({"ONE", "NR", "CL"}));
  baseline->add_option("--graph", baseline_graph, "relay graph supplying the budgets; trains one when absent")
      ->check(CLI::ExistingFile);

  auto* eval = app.add_subcommand("eval", "testing-curve row for a saved graph");
  add_common(eval, eval_opts, false);
  std::string eval_graph;
  eval->add_option("graph", eval_graph, "graph file")->required()->check(CLI::ExistingFile);

  auto* inspect = app.add_subcommand("inspect", "print graph structure, thresholds and merges");
  std::string inspect_graph;
  inspect->add_option("graph", inspect_graph, "graph file")->required()->check(CLI::ExistingFile);

  auto* sweep = app.add_subcommand("sweep-alpha", "relay runs over the config's alpha list");
  add_common(sweep, sweep_opts, true);

  CLI11_PARSE(app, argc, argv);
  rn_set_log_callback(print_line, nullptr);

  auto seed_args = [](const Common& c) {
    return std::pair<int, std::uint64_t>{c.seed.has_value() ? 1 : 0, c.seed.value_or(0)};
  };

  if (*train) {
    ConfigHandle config;
    if (const auto s = config.load(train_opts.config); s != RN_OK) return report(s);
    const auto [has_seed, seed] = seed_args(train_opts);
    int abandoned = 0;
    if (const auto s = rn_train(config.get(), train_opts.out_dir.c_str(), has_seed, seed, train_opts.dry_run, &abandoned);
        s != RN_OK)
      return report(s);
    if (train_opts.dry_run) std::printf("config valid; manifest written to %s\n", train_opts.out_dir.c_str());
    if (abandoned > 0) {
      std::fprintf(stderr, "%d seed(s) abandoned; partial graphs were saved\n", abandoned);
      return 2;
    }
    return 0;
  }
  if (*baseline) {
    ConfigHandle config;
    if (const auto s = config.load(baseline_opts.config); s != RN_OK) return report(s);
    const auto [has_seed, seed] = seed_args(baseline_opts);
    const rn_baseline_kind k = kind == "ONE" ? RN_BASELINE_ONE : kind == "NR" ? RN_BASELINE_NR : RN_BASELINE_CL;
    return report(rn_baseline(config.get(), k, baseline_graph.empty() ? nullptr : baseline_graph.c_str(),
                              baseline_opts.out_dir.c_str(), has_seed, seed, baseline_opts.dry_run));
  }
  if (*eval) {
    ConfigHandle config;
    if (!eval_opts.config.empty())
      if (const auto s = config.load(eval_opts.config); s != RN_OK) return report(s);
    const auto [has_seed, seed] = seed_args(eval_opts);
    double mean = 0.0, se = 0.0, success = 0.0;
    return report(rn_eval(eval_graph.c_str(), config.get(), eval_opts.out_dir.c_str(), has_seed, seed,
                          eval_opts.dry_run, &mean, &se, &success));
  }
  if (*inspect) {
    rn_graph* graph = nullptr;
    if (const auto s = rn_graph_load(inspect_graph.c_str(), &graph); s != RN_OK) return report(s);
    char* text = nullptr;
    const auto s = rn_graph_inspect(graph, &text);
    if (s == RN_OK) std::fputs(text, stdout);
    rn_string_free(text);
    rn_graph_free(graph);
    return report(s);
  }
  if (*sweep) {
    ConfigHandle config;
    if (const auto s = config.load(sweep_opts.config); s != RN_OK) return report(s);
    const auto [has_seed, seed] = seed_args(sweep_opts);
    return report(rn_sweep_alpha(config.get(), sweep_opts.out_dir.c_str(), has_seed, seed, sweep_opts.dry_run));
  }
  return 0;
}
