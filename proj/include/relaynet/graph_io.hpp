#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "json.hpp"
#include "relaynet/config.hpp"
#include "relaynet/relay_graph.hpp"

namespace relaynet {

inline constexpr int kGraphFormatVersion = 1;

struct GraphFile {
  RelayGraph graph;
  EnvConfig env;
  nlohmann::json config;  // snapshot of the experiment config, may be null
};

std::uint64_t fnv1a64(std::string_view bytes);

nlohmann::json graph_to_json(const RelayGraph& graph);
RelayGraph graph_from_json(const nlohmann::json& doc);

std::string serialize_graph(const GraphFile& file);
/// Throws Version for newer formats and Corrupt for truncation or checksum
/// mismatches.
GraphFile deserialize_graph(const std::string& text);

void save_graph(const std::string& path, const GraphFile& file);
GraphFile load_graph(const std::string& path);

nlohmann::json report_to_json(const ThresholdReport& report);

}  // namespace relaynet
