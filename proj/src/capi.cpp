#include "relaynet.h"

#include <cstring>
#include <exception>
#include <mutex>
#include <new>
#include <optional>
#include <string>

#include "relaynet/experiment.hpp"

struct rn_config {
  relaynet::ExperimentConfig config;
};

struct rn_graph {
  relaynet::GraphFile file;
};

namespace {

thread_local std::string g_last_error;

std::mutex g_log_mutex;
rn_log_fn g_log_fn = nullptr;
void* g_log_user = nullptr;

rn_status status_of(relaynet::ErrorCode code) {
  using relaynet::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return RN_ERR_INVALID_ARGUMENT;
    case ErrorCode::Dimension: return RN_ERR_DIMENSION;
    case ErrorCode::Numeric: return RN_ERR_NUMERIC;
    case ErrorCode::InfeasibleDistribution: return RN_ERR_INFEASIBLE;
    case ErrorCode::MissingValueFunction: return RN_ERR_NO_VALUE_FUNCTION;
    case ErrorCode::NoSuccessfulRollouts: return RN_ERR_NO_SUCCESSFUL_ROLLOUTS;
    case ErrorCode::DegenerateLabels: return RN_ERR_DEGENERATE_LABELS;
    case ErrorCode::ConstructionAbandoned: return RN_ERR_ABANDONED;
    case ErrorCode::Config: return RN_ERR_CONFIG;
    case ErrorCode::Io: return RN_ERR_IO;
    case ErrorCode::Version: return RN_ERR_VERSION;
    case ErrorCode::Corrupt: return RN_ERR_CORRUPT;
  }
  return RN_ERR_INTERNAL;
}

template <class F>
rn_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return RN_OK;
  } catch (const relaynet::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown failure";
  }
  return RN_ERR_INTERNAL;
}

rn_status null_argument(const char* what) {
  g_last_error = std::string(what) + " must not be null";
  return RN_ERR_INVALID_ARGUMENT;
}

relaynet::CommandOptions options(const char* out_dir, int has_seed, uint64_t seed, int dry_run) {
  relaynet::CommandOptions o;
  o.out_dir = out_dir;
  o.dry_run = dry_run != 0;
  if (has_seed) o.seed = seed;
  o.log = [](const std::string& line) {
    std::lock_guard<std::mutex> lock(g_log_mutex);
    if (g_log_fn) g_log_fn(line.c_str(), g_log_user);
  };
  return o;
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* rn_version(void) { return relaynet::kLibraryVersion; }

const char* rn_status_string(rn_status status) {
  switch (status) {
    case RN_OK: return "ok";
    case RN_ERR_INVALID_ARGUMENT: return "invalid argument";
    case RN_ERR_DIMENSION: return "dimension mismatch";
    case RN_ERR_NUMERIC: return "numeric failure";
    case RN_ERR_INFEASIBLE: return "infeasible distribution";
    case RN_ERR_NO_VALUE_FUNCTION: return "missing value function";
    case RN_ERR_NO_SUCCESSFUL_ROLLOUTS: return "no successful rollouts";
    case RN_ERR_DEGENERATE_LABELS: return "degenerate labels";
    case RN_ERR_ABANDONED: return "construction abandoned";
    case RN_ERR_CONFIG: return "config error";
    case RN_ERR_IO: return "io error";
    case RN_ERR_VERSION: return "version mismatch";
    case RN_ERR_CORRUPT: return "corrupt file";
    case RN_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* rn_last_error(void) { return g_last_error.c_str(); }

void rn_set_log_callback(rn_log_fn fn, void* user) {
  std::lock_guard<std::mutex> lock(g_log_mutex);
  g_log_fn = fn;
  g_log_user = user;
}

rn_status rn_config_load(const char* path, rn_config** out) {
  if (!path || !out) return null_argument("path and out");
  *out = nullptr;
  return guarded([&] { *out = new rn_config{relaynet::load_config(path)}; });
}

rn_status rn_config_parse(const char* json_text, rn_config** out) {
  if (!json_text || !out) return null_argument("json_text and out");
  *out = nullptr;
  return guarded([&] {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
      relaynet::fail(relaynet::ErrorCode::Config, std::string("cannot parse config: ") + e.what());
    }
    *out = new rn_config{relaynet::parse_config(doc)};
  });
}

void rn_config_free(rn_config* config) { delete config; }

rn_status rn_config_to_json(const rn_config* config, char** out) {
  if (!config || !out) return null_argument("config and out");
  return guarded([&] { *out = copy_string(relaynet::to_json(config->config).dump(2)); });
}

rn_status rn_train(const rn_config* config, const char* out_dir, int has_seed, uint64_t seed, int dry_run,
                   int* abandoned_out) {
  if (!config || !out_dir) return null_argument("config and out_dir");
  return guarded([&] {
    const int abandoned = relaynet::run_train(config->config, options(out_dir, has_seed, seed, dry_run));
    if (abandoned_out) *abandoned_out = abandoned;
  });
}

rn_status rn_baseline(const rn_config* config, rn_baseline_kind kind, const char* graph_path, const char* out_dir,
                      int has_seed, uint64_t seed, int dry_run) {
  if (!config || !out_dir) return null_argument("config and out_dir");
  relaynet::BaselineKind k;
  switch (kind) {
    case RN_BASELINE_ONE: k = relaynet::BaselineKind::ONE; break;
    case RN_BASELINE_NR: k = relaynet::BaselineKind::NR; break;
    case RN_BASELINE_CL: k = relaynet::BaselineKind::CL; break;
    default: g_last_error = "unknown baseline kind"; return RN_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    relaynet::run_baseline(config->config, k, graph_path ? graph_path : "", options(out_dir, has_seed, seed, dry_run));
  });
}

rn_status rn_sweep_alpha(const rn_config* config, const char* out_dir, int has_seed, uint64_t seed, int dry_run) {
  if (!config || !out_dir) return null_argument("config and out_dir");
  return guarded([&] { relaynet::run_sweep_alpha(config->config, options(out_dir, has_seed, seed, dry_run)); });
}

rn_status rn_eval(const char* graph_path, const rn_config* config, const char* out_dir, int has_seed, uint64_t seed,
                  int dry_run, double* mean_return, double* stderr_out, double* success_rate) {
  if (!graph_path || !out_dir) return null_argument("graph_path and out_dir");
  return guarded([&] {
    std::optional<relaynet::ExperimentConfig> c;
    if (config) c = config->config;
    const auto stats = relaynet::run_eval(graph_path, c, options(out_dir, has_seed, seed, dry_run));
    if (mean_return) *mean_return = stats.mean_return;
    if (stderr_out) *stderr_out = stats.stderr_;
    if (success_rate) *success_rate = stats.success_rate;
  });
}

rn_status rn_graph_load(const char* path, rn_graph** out) {
  if (!path || !out) return null_argument("path and out");
  *out = nullptr;
  return guarded([&] { *out = new rn_graph{relaynet::load_graph(path)}; });
}

rn_status rn_graph_save(const rn_graph* graph, const char* path) {
  if (!graph || !path) return null_argument("graph and path");
  return guarded([&] { relaynet::save_graph(path, graph->file); });
}

void rn_graph_free(rn_graph* graph) { delete graph; }

size_t rn_graph_node_count(const rn_graph* graph) { return graph ? graph->file.graph.chain_node_count() : 0; }
size_t rn_graph_edge_count(const rn_graph* graph) { return graph ? graph->file.graph.edges().size() : 0; }
size_t rn_graph_merge_count(const rn_graph* graph) { return graph ? graph->file.graph.merges().size() : 0; }

size_t rn_graph_state_size(const rn_graph* graph) {
  if (!graph) return 0;
  size_t n = 0;
  guarded([&] { n = relaynet::make_environment(graph->file.env)->spec().state_size; });
  return n;
}

rn_status rn_graph_inspect(const rn_graph* graph, char** out) {
  if (!graph || !out) return null_argument("graph and out");
  return guarded([&] { *out = copy_string(relaynet::inspect_graph(graph->file)); });
}

rn_status rn_graph_execute(const rn_graph* graph, const double* start, size_t state_size, rn_mode mode,
                           int max_steps, double gamma, uint64_t seed, double* discounted_return, int* steps,
                           int* succeeded) {
  if (!graph || !start) return null_argument("graph and start");
  return guarded([&] {
    const auto env = relaynet::make_environment(graph->file.env);
    relaynet::require(state_size == env->spec().state_size, relaynet::ErrorCode::Dimension,
                      "start state has the wrong size");
    relaynet::require(max_steps >= 1, relaynet::ErrorCode::InvalidArgument, "max_steps must be at least 1");
    relaynet::ExecutionOptions o;
    switch (mode) {
      case RN_MODE_PARENT_CHAIN: o.mode = relaynet::ExecutionMode::ParentChain; break;
      case RN_MODE_BEST_V: o.mode = relaynet::ExecutionMode::BestV; break;
      case RN_MODE_BEST_V_EVERY_STEP: o.mode = relaynet::ExecutionMode::BestVEveryStep; break;
      default: relaynet::fail(relaynet::ErrorCode::InvalidArgument, "unknown execution mode");
    }
    o.max_steps = max_steps;
    o.gamma = gamma;
    relaynet::Rng rng = relaynet::make_rng(seed, "execute");
    const auto trace =
        relaynet::execute_graph(graph->file.graph, *env, std::vector<double>(start, start + state_size), o, rng);
    if (discounted_return) *discounted_return = trace.discounted_return;
    if (steps) *steps = static_cast<int>(trace.length());
    if (succeeded) *succeeded = trace.succeeded ? 1 : 0;
  });
}

void rn_string_free(char* text) { delete[] text; }

}  // extern "C"
