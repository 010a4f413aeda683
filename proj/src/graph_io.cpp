#include "relaynet/graph_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace relaynet {

using nlohmann::json;

namespace {

constexpr const char* kFormatName = "relaynet-graph";

json features_to_json(const FeatureMap& f) {
  json dims = json::array();
  for (const auto& d : f.dims())
    dims.push_back({{"kind", d.kind == FeatureMap::Kind::Angle ? "angle" : "scaled"}, {"scale", d.scale}});
  return dims;
}

FeatureMap features_from_json(const json& j) {
  std::vector<FeatureMap::Dim> dims;
  for (const auto& d : j) {
    const auto kind = d.at("kind").get<std::string>();
    require(kind == "angle" || kind == "scaled", ErrorCode::Corrupt, "unknown feature kind " + kind);
    dims.push_back({kind == "angle" ? FeatureMap::Kind::Angle : FeatureMap::Kind::Scaled, d.at("scale").get<double>()});
  }
  return FeatureMap(std::move(dims));
}

json mlp_to_json(const MlpParams& p) {
  json weights = json::array(), biases = json::array();
  for (const auto& w : p.weights) weights.push_back(std::vector<double>(w.data().begin(), w.data().end()));
  for (const auto& b : p.biases) biases.push_back(std::vector<double>(b.data().begin(), b.data().end()));
  return {{"layer_sizes", p.layer_sizes}, {"weights", weights}, {"biases", biases}};
}

MlpParams mlp_from_json(const json& j) {
  MlpParams p = MlpParams::zeros(j.at("layer_sizes").get<std::vector<std::size_t>>());
  const auto& weights = j.at("weights");
  const auto& biases = j.at("biases");
  require(weights.size() == p.num_layers() && biases.size() == p.num_layers(), ErrorCode::Corrupt,
          "layer count does not match layer sizes");
  for (std::size_t l = 0; l < p.num_layers(); ++l) {
    const auto w = weights[l].get<std::vector<double>>();
    const auto b = biases[l].get<std::vector<double>>();
    require(w.size() == p.weights[l].size() && b.size() == p.biases[l].size(), ErrorCode::Corrupt,
            "weight array does not match layer sizes");
    std::copy(w.begin(), w.end(), p.weights[l].data().begin());
    std::copy(b.begin(), b.end(), p.biases[l].data().begin());
  }
  return p;
}

json policy_to_json(const GaussianPolicy& p) {
  return {{"features", features_to_json(p.features)},
          {"mean_net", mlp_to_json(p.mean_net)},
          {"log_std", p.log_std},
          {"action_scale", p.action_scale}};
}

GaussianPolicy policy_from_json(const json& j) {
  GaussianPolicy p;
  p.features = features_from_json(j.at("features"));
  p.mean_net = mlp_from_json(j.at("mean_net"));
  p.log_std = j.at("log_std").get<std::vector<double>>();
  p.action_scale = j.at("action_scale").get<std::vector<double>>();
  p.validate();
  return p;
}

json value_to_json(const ValueFunction& v) {
  return {{"features", features_to_json(v.features)},
          {"net", mlp_to_json(v.net)},
          {"out_scale", v.out_scale},
          {"out_shift", v.out_shift}};
}

ValueFunction value_from_json(const json& j) {
  ValueFunction v;
  v.features = features_from_json(j.at("features"));
  v.net = mlp_from_json(j.at("net"));
  v.out_scale = j.at("out_scale").get<double>();
  v.out_shift = j.at("out_shift").get<double>();
  v.validate();
  return v;
}

ThresholdReport report_from_json(const json& j) {
  ThresholdReport r;
  r.v_bar = j.at("v_bar").get<double>();
  r.r_bar = j.at("r_bar").get<double>();
  r.m = j.at("m").get<int>();
  const auto& h = j.at("holdout");
  r.holdout = {h.at("tp").get<long>(), h.at("fp").get<long>(), h.at("fn").get<long>(), h.at("tn").get<long>()};
  r.fit_errors = j.at("fit_errors").get<long>();
  r.degenerate = j.at("degenerate").get<bool>();
  r.inverted = j.at("inverted").get<bool>();
  r.warning = j.at("warning").get<std::string>();
  r.labels = j.at("labels").get<std::vector<int>>();
  return r;
}

json dist_to_json(const GaussianDist& d) { return {{"mean", d.mean}, {"variance", d.variance}}; }

GaussianDist dist_from_json(const json& j) {
  GaussianDist d{j.at("mean").get<std::vector<double>>(), j.at("variance").get<std::vector<double>>()};
  d.validate();
  return d;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

json report_to_json(const ThresholdReport& r) {
  return {{"v_bar", r.v_bar},
          {"r_bar", r.r_bar},
          {"m", r.m},
          {"holdout", {{"tp", r.holdout.tp}, {"fp", r.holdout.fp}, {"fn", r.holdout.fn}, {"tn", r.holdout.tn}}},
          {"fit_errors", r.fit_errors},
          {"degenerate", r.degenerate},
          {"inverted", r.inverted},
          {"warning", r.warning},
          {"labels", r.labels}};
}

json graph_to_json(const RelayGraph& graph) {
  json nodes = json::array();
  for (const auto& n : graph.nodes()) {
    json node = {{"id", n.id}, {"chain", n.chain}, {"chain_index", n.chain_index}};
    node["rho"] = n.rho ? dist_to_json(*n.rho) : json(nullptr);
    nodes.push_back(node);
  }
  json edges = json::array();
  for (const auto& e : graph.edges()) {
    json edge = {{"from", e.from},
                 {"to", e.to},
                 {"threshold", e.threshold},
                 {"alpha", e.alpha},
                 {"samples", e.samples},
                 {"failure_predicates", e.failure_predicates},
                 {"policy", policy_to_json(*e.policy)},
                 {"value", value_to_json(*e.value)},
                 {"report", report_to_json(e.report)}};
    edge["refined"] = e.refined ? report_to_json(*e.refined) : json(nullptr);
    edges.push_back(edge);
  }
  json merges = json::array();
  for (const auto& m : graph.merges())
    merges.push_back({{"merged_from", m.merged_from},
                      {"merged_into", m.merged_into},
                      {"similarity", m.similarity},
                      {"samples_saved", m.samples_saved}});
  return {{"nodes", nodes}, {"edges", edges}, {"merges", merges}};
}

RelayGraph graph_from_json(const json& doc) {
  RelayGraph graph;
  try {
    const auto& nodes = doc.at("nodes");
    require(!nodes.empty() && nodes[0].at("id").get<int>() == RelayGraph::kRoot, ErrorCode::Corrupt,
            "graph file has no root node");
    for (std::size_t i = 1; i < nodes.size(); ++i) {
      const auto& n = nodes[i];
      require(n.at("id").get<int>() == static_cast<int>(i), ErrorCode::Corrupt, "node ids are not sequential");
      graph.add_node(dist_from_json(n.at("rho")), n.at("chain").get<int>(), n.at("chain_index").get<int>());
    }
    for (const auto& e : doc.at("edges")) {
      RelayEdge edge;
      edge.from = e.at("from").get<int>();
      edge.to = e.at("to").get<int>();
      edge.threshold = e.at("threshold").get<double>();
      edge.alpha = e.at("alpha").get<double>();
      edge.samples = e.at("samples").get<long>();
      edge.failure_predicates = e.at("failure_predicates").get<std::vector<std::string>>();
      edge.policy = std::make_shared<const GaussianPolicy>(policy_from_json(e.at("policy")));
      edge.value = std::make_shared<const ValueFunction>(value_from_json(e.at("value")));
      edge.report = report_from_json(e.at("report"));
      if (!e.at("refined").is_null()) edge.refined = report_from_json(e.at("refined"));
      graph.add_edge(std::move(edge));
    }
    for (const auto& m : doc.at("merges"))
      graph.add_merge({m.at("merged_from").get<int>(), m.at("merged_into").get<int>(),
                       m.at("similarity").get<double>(), m.at("samples_saved").get<long>()});
  } catch (const json::exception& e) {
    fail(ErrorCode::Corrupt, std::string("malformed graph record: ") + e.what());
  }
  graph.validate();
  return graph;
}

std::string serialize_graph(const GraphFile& file) {
  const json payload = {{"env", env_to_json(file.env)}, {"graph", graph_to_json(file.graph)}, {"config", file.config}};
  const std::string body = payload.dump();
  const json doc = {{"format", kFormatName},
                    {"version", kGraphFormatVersion},
                    {"checksum", hex64(fnv1a64(body))},
                    {"payload", payload}};
  return doc.dump() + "\n";
}

GraphFile deserialize_graph(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Corrupt, std::string("graph file is truncated or malformed: ") + e.what());
  }
  require(doc.is_object() && doc.value("format", "") == kFormatName, ErrorCode::Corrupt, "not a relay graph file");
  require(doc.contains("version") && doc["version"].is_number_integer(), ErrorCode::Corrupt,
          "graph file has no version");
  const int version = doc["version"].get<int>();
  require(version <= kGraphFormatVersion, ErrorCode::Version,
          "graph file version " + std::to_string(version) + " is newer than supported version " +
              std::to_string(kGraphFormatVersion));
  require(version >= 1, ErrorCode::Version, "unsupported graph file version " + std::to_string(version));
  require(doc.contains("payload") && doc.contains("checksum") && doc["checksum"].is_string(), ErrorCode::Corrupt,
          "graph file is missing its payload");
  const json& payload = doc["payload"];
  require(hex64(fnv1a64(payload.dump())) == doc["checksum"].get<std::string>(), ErrorCode::Corrupt,
          "graph file checksum mismatch");
  GraphFile file;
  try {
    file.env = env_from_json(payload.at("env"));
    file.config = payload.at("config");
  } catch (const json::exception& e) {
    fail(ErrorCode::Corrupt, std::string("malformed graph file: ") + e.what());
  }
  file.graph = graph_from_json(payload.at("graph"));
  return file;
}

void save_graph(const std::string& path, const GraphFile& file) {
  const std::string text = serialize_graph(file);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path);
  out << text;
  if (!out) fail(ErrorCode::Io, "write failed for " + path);
}

GraphFile load_graph(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_graph(ss.str());
}

}  // namespace relaynet
