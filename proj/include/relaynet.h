#ifndef RELAYNET_H
#define RELAYNET_H

#include <stddef.h>
#include <stdint.h>

#if defined(RELAYNET_BUILDING_LIBRARY)
#define RN_API __attribute__((visibility("default")))
#else
#define RN_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rn_status {
  RN_OK = 0,
  RN_ERR_INVALID_ARGUMENT = 1,
  RN_ERR_DIMENSION = 2,
  RN_ERR_NUMERIC = 3,
  RN_ERR_INFEASIBLE = 4,
  RN_ERR_NO_VALUE_FUNCTION = 5,
  RN_ERR_NO_SUCCESSFUL_ROLLOUTS = 6,
  RN_ERR_DEGENERATE_LABELS = 7,
  RN_ERR_ABANDONED = 8,
  RN_ERR_CONFIG = 9,
  RN_ERR_IO = 10,
  RN_ERR_VERSION = 11,
  RN_ERR_CORRUPT = 12,
  RN_ERR_INTERNAL = 13
} rn_status;

typedef enum rn_baseline_kind { RN_BASELINE_ONE = 0, RN_BASELINE_NR = 1, RN_BASELINE_CL = 2 } rn_baseline_kind;

typedef enum rn_mode { RN_MODE_PARENT_CHAIN = 0, RN_MODE_BEST_V = 1, RN_MODE_BEST_V_EVERY_STEP = 2 } rn_mode;

typedef struct rn_config rn_config;
typedef struct rn_graph rn_graph;

/* Receives one progress line at a time; `user` is passed through. */
typedef void (*rn_log_fn)(const char* line, void* user);

RN_API const char* rn_version(void);
RN_API const char* rn_status_string(rn_status status);
/* Message of the last failed call on this thread; empty when none. */
RN_API const char* rn_last_error(void);
RN_API void rn_set_log_callback(rn_log_fn fn, void* user);

RN_API rn_status rn_config_load(const char* path, rn_config** out);
RN_API rn_status rn_config_parse(const char* json_text, rn_config** out);
RN_API void rn_config_free(rn_config* config);
/* Caller frees the string with rn_string_free. */
RN_API rn_status rn_config_to_json(const rn_config* config, char** out);

/* Each runner takes an optional seed override: pass has_seed = 0 to use the
   config's seed list. Runners write into out_dir. */
RN_API rn_status rn_train(const rn_config* config, const char* out_dir, int has_seed, uint64_t seed, int dry_run,
                          int* abandoned_out);
/* graph_path may be NULL: a relay run is trained first for its artifacts. */
RN_API rn_status rn_baseline(const rn_config* config, rn_baseline_kind kind, const char* graph_path, const char* out_dir,
                             int has_seed, uint64_t seed, int dry_run);
RN_API rn_status rn_sweep_alpha(const rn_config* config, const char* out_dir, int has_seed, uint64_t seed,
                                int dry_run);
/* config may be NULL: the snapshot in the graph file is used. */
RN_API rn_status rn_eval(const char* graph_path, const rn_config* config, const char* out_dir, int has_seed,
                         uint64_t seed, int dry_run, double* mean_return, double* stderr_out, double* success_rate);

RN_API rn_status rn_graph_load(const char* path, rn_graph** out);
RN_API rn_status rn_graph_save(const rn_graph* graph, const char* path);
RN_API void rn_graph_free(rn_graph* graph);
/* Chain nodes; the dummy root is not counted. */
RN_API size_t rn_graph_node_count(const rn_graph* graph);
RN_API size_t rn_graph_edge_count(const rn_graph* graph);
RN_API size_t rn_graph_merge_count(const rn_graph* graph);
RN_API size_t rn_graph_state_size(const rn_graph* graph);
RN_API rn_status rn_graph_inspect(const rn_graph* graph, char** out);
/* Runs the graph once from `start` (state_size entries) with mean actions.
   Any output pointer may be NULL. */
RN_API rn_status rn_graph_execute(const rn_graph* graph, const double* start, size_t state_size, rn_mode mode,
                                  int max_steps, double gamma, uint64_t seed, double* discounted_return,
                                  int* steps, int* succeeded);

RN_API void rn_string_free(char* text);

#ifdef __cplusplus
}
#endif

#endif
