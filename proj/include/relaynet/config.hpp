#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "relaynet/cartpole.hpp"
#include "relaynet/pointmass.hpp"
#include "relaynet/relay_graph.hpp"
#include "relaynet/runtime.hpp"

namespace relaynet {

struct EnvConfig {
  std::string name = "cartpole";
  CartPoleParams cartpole;
  PointMassParams pointmass;
};

enum class Pipeline { Relay, Multichain };

struct ExperimentConfig {
  Pipeline pipeline = Pipeline::Relay;
  EnvConfig env;
  RelayTask task;  // env filled by make_task
  RelayConfig relay;
  double epsilon = 0.5;
  std::vector<GaussianDist> chain_seeds;  // multichain rho_0 per chain
  std::vector<std::uint64_t> seeds{1};
  std::vector<BaselineKind> baselines;
  std::vector<double> alpha_sweep{0.0, 5.0, 30.0, 100.0};
};

/// Carries every problem found, one message per offending key.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> issues);
  const std::vector<std::string>& issues() const noexcept { return issues_; }

 private:
  std::vector<std::string> issues_;
};

ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& config);

nlohmann::json env_to_json(const EnvConfig& env);
EnvConfig env_from_json(const nlohmann::json& doc);

std::shared_ptr<const Environment> make_environment(const EnvConfig& env);
/// The task with its environment instantiated.
RelayTask make_task(const ExperimentConfig& config);

const char* to_string(Pipeline pipeline);
const char* to_string(ExecutionMode mode);

}  // namespace relaynet
