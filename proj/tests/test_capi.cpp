// Links only the shared library and its C header.
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>

#include "relaynet.h"

namespace {

int failures = 0;

void expect(bool ok, const char* what) {
  if (!ok) {
    std::fprintf(stderr, "FAILED: %s (last error: %s)\n", what, rn_last_error());
    ++failures;
  }
}

}  // namespace

int main() {
  namespace fs = std::filesystem;
  const fs::path out = fs::temp_directory_path() / "relaynet-capi-test";
  fs::remove_all(out);

  expect(std::strlen(rn_version()) > 0, "version string");
  expect(std::strcmp(rn_status_string(RN_ERR_CORRUPT), rn_status_string(RN_OK)) != 0, "status strings");

  rn_config* bad = nullptr;
  expect(rn_config_parse("{\"gamma\": 1.5}", &bad) == RN_ERR_CONFIG, "bad gamma rejected");
  expect(bad == nullptr, "no handle on failure");
  expect(std::strstr(rn_last_error(), "gamma") != nullptr, "error names the key");
  expect(rn_config_parse("{not json", &bad) == RN_ERR_CONFIG, "malformed json rejected");
  expect(rn_config_load(nullptr, &bad) == RN_ERR_INVALID_ARGUMENT, "null path rejected");

  rn_config* cfg = nullptr;
  expect(rn_config_load(RELAYNET_TEST_DATA "/pointmass_tiny.json", &cfg) == RN_OK, "load config");
  if (!cfg) return 1;
  char* text = nullptr;
  expect(rn_config_to_json(cfg, &text) == RN_OK && text && std::strstr(text, "pointmass"), "config to json");
  rn_string_free(text);

  int abandoned = -1;
  expect(rn_train(cfg, out.c_str(), 1, 3, 1, &abandoned) == RN_OK, "dry run");
  expect(abandoned == 0, "dry run abandons nothing");
  expect(fs::exists(out / "manifest.json") && !fs::exists(out / "seed-3"), "dry run writes only the manifest");

  expect(rn_train(cfg, out.c_str(), 1, 3, 0, &abandoned) == RN_OK, "train");
  const std::string graph_path = (out / "seed-3" / "graph.json").string();
  rn_graph* graph = nullptr;
  expect(rn_graph_load(graph_path.c_str(), &graph) == RN_OK, "load graph");
  if (graph) {
    expect(rn_graph_node_count(graph) >= 1, "graph has a chain node");
    expect(rn_graph_edge_count(graph) == rn_graph_node_count(graph), "one edge per chain node");
    expect(rn_graph_state_size(graph) == 4, "state size");
    char* summary = nullptr;
    expect(rn_graph_inspect(graph, &summary) == RN_OK && summary && std::strlen(summary) > 0, "inspect");
    rn_string_free(summary);

    const double start[4] = {3.0, 0.0, 0.0, 0.0};
    double r1 = 0, r2 = 0;
    int steps = 0, succ = 0;
    expect(rn_graph_execute(graph, start, 4, RN_MODE_PARENT_CHAIN, 50, 0.99, 1, &r1, &steps, &succ) == RN_OK,
           "execute");
    expect(steps >= 1 && steps <= 50, "step count");
    const std::string copy = (out / "copy.json").string();
    expect(rn_graph_save(graph, copy.c_str()) == RN_OK, "save graph");
    rn_graph* again = nullptr;
    expect(rn_graph_load(copy.c_str(), &again) == RN_OK, "reload graph");
    if (again) {
      expect(rn_graph_execute(again, start, 4, RN_MODE_PARENT_CHAIN, 50, 0.99, 1, &r2, nullptr, nullptr) == RN_OK,
             "execute reloaded");
      expect(r1 == r2, "reloaded graph returns the same value");
      rn_graph_free(again);
    }
    expect(rn_graph_execute(graph, start, 3, RN_MODE_PARENT_CHAIN, 50, 0.99, 1, &r1, nullptr, nullptr) ==
               RN_ERR_DIMENSION,
           "wrong state size rejected");
    rn_graph_free(graph);
  }
  rn_graph* missing = nullptr;
  expect(rn_graph_load((out / "nope.json").c_str(), &missing) == RN_ERR_IO, "missing file is an IO error");

  double mean = 0, se = 0, rate = 0;
  expect(rn_eval(graph_path.c_str(), nullptr, out.c_str(), 1, 3, 0, &mean, &se, &rate) == RN_OK, "eval");
  expect(rate >= 0.0 && rate <= 1.0, "success rate range");

  rn_config_free(cfg);
  if (failures == 0) std::printf("C API: all checks passed\n");
  return failures == 0 ? 0 : 1;
}
