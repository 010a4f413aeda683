#include "relaynet/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

namespace relaynet {

using nlohmann::json;

namespace {

std::string join_issues(const std::vector<std::string>& issues) {
  std::string out = "invalid config:";
  for (const auto& i : issues) out += "\n  " + i;
  return out;
}

class Section {
 public:
  Section(const json* node, std::string path, std::vector<std::string>& issues)
      : node_(node), path_(std::move(path)), issues_(&issues) {
    if (node_ && !node_->is_object()) {
      issues_->push_back(path_ + ": expected an object");
      node_ = nullptr;
    }
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const char* key) const { return node_ && node_->contains(key); }

  template <class T>
  void field(const char* key, T& out) {
    seen_.insert(key);
    if (!has(key)) return;
    const json& v = node_->at(key);
    if (!type_ok<T>(v)) {
      issues_->push_back(key_path(key) + ": wrong type");
      return;
    }
    out = v.get<T>();
  }

  Section section(const char* key) {
    seen_.insert(key);
    return Section(has(key) ? &node_->at(key) : nullptr, key_path(key), *issues_);
  }

  const json* raw(const char* key) {
    seen_.insert(key);
    return has(key) ? &node_->at(key) : nullptr;
  }

  void finish() const {
    if (!node_) return;
    for (const auto& item : node_->items())
      if (!seen_.count(item.key())) issues_->push_back(key_path(item.key()) + ": unknown key");
  }

 private:
  template <class T>
  static bool type_ok(const json& v) {
    if constexpr (std::is_same_v<T, bool>) {
      return v.is_boolean();
    } else if constexpr (std::is_integral_v<T>) {
      return v.is_number_integer();
    } else if constexpr (std::is_floating_point_v<T>) {
      return v.is_number();
    } else if constexpr (std::is_same_v<T, std::string>) {
      return v.is_string();
    } else {
      if (!v.is_array()) return false;
      for (const auto& e : v)
        if (!type_ok<typename T::value_type>(e)) return false;
      return true;
    }
  }

  const json* node_;
  std::string path_;
  std::vector<std::string>* issues_;
  std::set<std::string> seen_;
};

void read_dist(Section s, GaussianDist& d) {
  s.field("mean", d.mean);
  s.field("variance", d.variance);
  s.finish();
}

json dist_json(const GaussianDist& d) { return {{"mean", d.mean}, {"variance", d.variance}}; }

void read_cartpole(Section s, CartPoleParams& p) {
  s.field("cart_mass", p.cart_mass);
  s.field("pole_mass", p.pole_mass);
  s.field("pole_length", p.pole_length);
  s.field("gravity", p.gravity);
  s.field("force_bound", p.force_bound);
  s.field("action_scale", p.action_scale);
  s.field("track_limit", p.track_limit);
  s.field("max_angular_velocity", p.max_angular_velocity);
  s.field("max_cart_velocity", p.max_cart_velocity);
  s.field("timestep", p.timestep);
  s.field("frame_skip", p.frame_skip);
  s.field("alive_bonus", p.alive_bonus);
  s.field("control_cost", p.control_cost);
  s.finish();
}

json cartpole_json(const CartPoleParams& p) {
  return {{"cart_mass", p.cart_mass},
          {"pole_mass", p.pole_mass},
          {"pole_length", p.pole_length},
          {"gravity", p.gravity},
          {"force_bound", p.force_bound},
          {"action_scale", p.action_scale},
          {"track_limit", p.track_limit},
          {"max_angular_velocity", p.max_angular_velocity},
          {"max_cart_velocity", p.max_cart_velocity},
          {"timestep", p.timestep},
          {"frame_skip", p.frame_skip},
          {"alive_bonus", p.alive_bonus},
          {"control_cost", p.control_cost}};
}

void read_pointmass(Section s, PointMassParams& p) {
  s.field("mass", p.mass);
  s.field("force_bound", p.force_bound);
  s.field("action_scale", p.action_scale);
  s.field("arena_half_width", p.arena_half_width);
  s.field("goal_x", p.goal_x);
  s.field("goal_y", p.goal_y);
  s.field("reach_radius", p.reach_radius);
  s.field("max_speed", p.max_speed);
  s.field("timestep", p.timestep);
  s.field("frame_skip", p.frame_skip);
  s.field("alive_bonus", p.alive_bonus);
  s.field("control_cost", p.control_cost);
  s.finish();
}

json pointmass_json(const PointMassParams& p) {
  return {{"mass", p.mass},
          {"force_bound", p.force_bound},
          {"action_scale", p.action_scale},
          {"arena_half_width", p.arena_half_width},
          {"goal_x", p.goal_x},
          {"goal_y", p.goal_y},
          {"reach_radius", p.reach_radius},
          {"max_speed", p.max_speed},
          {"timestep", p.timestep},
          {"frame_skip", p.frame_skip},
          {"alive_bonus", p.alive_bonus},
          {"control_cost", p.control_cost}};
}

ExecutionMode parse_mode(const std::string& s, bool& ok) {
  ok = true;
  if (s == "parent-chain") return ExecutionMode::ParentChain;
  if (s == "best-v") return ExecutionMode::BestV;
  if (s == "best-v-every-step") return ExecutionMode::BestVEveryStep;
  ok = false;
  return ExecutionMode::ParentChain;
}

class Checker {
 public:
  explicit Checker(std::vector<std::string>& issues) : issues_(&issues) {}
  void operator()(bool ok, const std::string& key, const std::string& what) {
    if (!ok) issues_->push_back(key + ": " + what);
  }

 private:
  std::vector<std::string>* issues_;
};

bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

void check_dist(Checker& check, const GaussianDist& d, const std::string& key, std::size_t dim) {
  check(d.mean.size() == dim, key + ".mean", "expected " + std::to_string(dim) + " entries");
  check(d.variance.size() == dim, key + ".variance", "expected " + std::to_string(dim) + " entries");
  check(all_finite(d.mean), key + ".mean", "must be finite");
  bool positive = all_finite(d.variance);
  for (double v : d.variance) positive = positive && v > 0.0;
  check(positive, key + ".variance", "must be positive and finite");
}

void check_params(Checker& check, const EnvConfig& env) {
  const std::string p = "env.params.";
  if (env.name == "cartpole") {
    const auto& c = env.cartpole;
    check(c.cart_mass > 0, p + "cart_mass", "must be positive");
    check(c.pole_mass > 0, p + "pole_mass", "must be positive");
    check(c.pole_length > 0, p + "pole_length", "must be positive");
    check(c.gravity > 0, p + "gravity", "must be positive");
    check(c.force_bound > 0, p + "force_bound", "must be positive");
    check(c.action_scale > 0, p + "action_scale", "must be positive");
    check(c.track_limit > 0, p + "track_limit", "must be positive");
    check(c.max_angular_velocity > 0, p + "max_angular_velocity", "must be positive");
    check(c.max_cart_velocity > 0, p + "max_cart_velocity", "must be positive");
    check(c.timestep > 0, p + "timestep", "must be positive");
    check(c.frame_skip >= 1, p + "frame_skip", "must be at least 1");
    check(c.control_cost >= 0, p + "control_cost", "must be non-negative");
  } else {
    const auto& m = env.pointmass;
    check(m.mass > 0, p + "mass", "must be positive");
    check(m.force_bound > 0, p + "force_bound", "must be positive");
    check(m.action_scale > 0, p + "action_scale", "must be positive");
    check(m.arena_half_width > 0, p + "arena_half_width", "must be positive");
    check(m.reach_radius > 0, p + "reach_radius", "must be positive");
    check(m.max_speed > 0, p + "max_speed", "must be positive");
    check(m.timestep > 0, p + "timestep", "must be positive");
    check(m.frame_skip >= 1, p + "frame_skip", "must be at least 1");
    check(m.control_cost >= 0, p + "control_cost", "must be non-negative");
  }
}

void check_hidden(Checker& check, const std::vector<std::size_t>& h, const std::string& key) {
  bool ok = !h.empty();
  for (auto n : h) ok = ok && n >= 1;
  check(ok, key, "needs at least one layer of width >= 1");
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> issues)
    : Error(ErrorCode::Config, join_issues(issues)), issues_(std::move(issues)) {}

const char* to_string(Pipeline pipeline) { return pipeline == Pipeline::Relay ? "relay" : "multichain"; }

const char* to_string(ExecutionMode mode) {
  switch (mode) {
    case ExecutionMode::ParentChain: return "parent-chain";
    case ExecutionMode::BestV: return "best-v";
    case ExecutionMode::BestVEveryStep: return "best-v-every-step";
  }
  return "?";
}

ExperimentConfig parse_config(const json& doc) {
  std::vector<std::string> issues;
  ExperimentConfig c;
  c.task.base.max_steps = 400;
  Section top(&doc, "", issues);

  std::string pipeline = to_string(c.pipeline);
  top.field("pipeline", pipeline);
  if (pipeline == "relay") c.pipeline = Pipeline::Relay;
  else if (pipeline == "multichain") c.pipeline = Pipeline::Multichain;
  else issues.push_back("pipeline: expected relay or multichain");

  {
    Section env = top.section("env");
    env.field("name", c.env.name);
    if (c.env.name == "cartpole") read_cartpole(env.section("params"), c.env.cartpole);
    else if (c.env.name == "pointmass") read_pointmass(env.section("params"), c.env.pointmass);
    else {
      issues.push_back("env.name: unknown environment '" + c.env.name + "'");
      env.raw("params");
    }
    env.finish();
  }
  {
    Section task = top.section("task");
    read_dist(task.section("rho"), c.task.rho);
    read_dist(task.section("rho0"), c.task.rho0);
    task.field("max_steps", c.task.base.max_steps);
    task.field("failure_predicates", c.task.base.failure_predicates);
    task.field("root_failures", c.task.root_failures);
    task.finish();
  }
  top.field("gamma", c.task.gamma);
  auto& ppo = c.relay.search.ppo;
  top.field("lambda", ppo.lambda);
  {
    Section s = top.section("ppo");
    s.field("clip", ppo.clip);
    s.field("epochs", ppo.epochs);
    s.field("minibatch", ppo.minibatch);
    s.field("batch_steps", ppo.batch_steps);
    s.field("step_size", ppo.step_size);
    s.field("value_step_size", ppo.value_step_size);
    s.field("entropy_coef", ppo.entropy_coef);
    s.field("max_grad_norm", ppo.max_grad_norm);
    s.field("kl_cap", ppo.kl_cap);
    s.finish();
  }
  {
    Section s = top.section("network");
    s.field("policy_hidden", c.relay.search.network.policy_hidden);
    s.field("value_hidden", c.relay.search.network.value_hidden);
    s.finish();
  }
  auto& r = c.relay;
  {
    Section s = top.section("relay");
    s.field("alpha", r.alpha);
    s.field("chain_cap", r.chain_cap);
    s.field("node_budget", r.node_budget);
    s.field("total_budget", r.total_budget);
    s.field("calibration_rollouts", r.calibration_rollouts);
    s.field("holdout_fraction", r.holdout_fraction);
    s.field("refine", r.refine);
    s.field("success_rate", r.success_rate);
    s.field("success_episodes", r.success_episodes);
    s.field("eval_episodes", r.eval_episodes);
    s.field("curve_every", r.curve_every);
    s.field("confirm_iterations", r.search.confirm_iterations);
    s.field("w_samples", r.w_samples);
    s.finish();
  }
  {
    Section s = top.section("refine");
    s.field("rollouts", r.refine_config.rollouts);
    s.field("epochs", r.refine_config.epochs);
    s.field("minibatch", r.refine_config.minibatch);
    s.field("step_size", r.refine_config.step_size);
    s.finish();
  }
  {
    Section s = top.section("eq2");
    s.field("max_iterations", r.eq2.max_iterations);
    s.field("initial_step", r.eq2.initial_step);
    s.field("min_step", r.eq2.min_step);
    s.field("tolerance", r.eq2.tolerance);
    s.finish();
  }
  {
    Section s = top.section("execution");
    std::string mode = to_string(r.mode);
    std::string junction = r.junction == JunctionChoice::Value ? "value" : "random";
    s.field("mode", mode);
    s.field("junction", junction);
    bool ok = false;
    r.mode = parse_mode(mode, ok);
    if (!ok) issues.push_back("execution.mode: expected parent-chain, best-v or best-v-every-step");
    if (junction == "value") r.junction = JunctionChoice::Value;
    else if (junction == "random") r.junction = JunctionChoice::Random;
    else issues.push_back("execution.junction: expected value or random");
    s.finish();
  }
  {
    Section s = top.section("multichain");
    s.field("epsilon", c.epsilon);
    if (const json* seeds = s.raw("seeds")) {
      if (!seeds->is_array()) {
        issues.push_back("multichain.seeds: expected an array");
      } else {
        for (std::size_t i = 0; i < seeds->size(); ++i) {
          GaussianDist d;
          read_dist(Section(&(*seeds)[i], "multichain.seeds[" + std::to_string(i) + "]", issues), d);
          c.chain_seeds.push_back(std::move(d));
        }
      }
    }
    s.finish();
  }
  std::vector<long long> seeds;
  top.field("seeds", seeds);
  if (top.has("seeds")) {
    c.seeds.clear();
    for (long long s : seeds) {
      if (s < 0) issues.push_back("seeds: must be non-negative");
      c.seeds.push_back(static_cast<std::uint64_t>(s));
    }
  }
  std::vector<std::string> baselines;
  top.field("baselines", baselines);
  for (const auto& b : baselines) {
    if (b == "ONE" || b == "NR" || b == "CL") c.baselines.push_back(parse_baseline(b));
    else issues.push_back("baselines: unknown baseline '" + b + "'");
  }
  top.field("alpha_sweep", c.alpha_sweep);
  top.finish();

  ppo.gamma = c.task.gamma;

  Checker check(issues);
  const bool known_env = c.env.name == "cartpole" || c.env.name == "pointmass";
  const std::size_t before_params = issues.size();
  if (known_env) check_params(check, c.env);
  if (known_env && issues.size() == before_params) {
    const auto env = make_environment(c.env);
    const std::size_t dim = env->spec().state_size;
    check_dist(check, c.task.rho, "task.rho", dim);
    check_dist(check, c.task.rho0, "task.rho0", dim);
    for (std::size_t i = 0; i < c.chain_seeds.size(); ++i)
      check_dist(check, c.chain_seeds[i], "multichain.seeds[" + std::to_string(i) + "]", dim);
    const auto known = env->failure_predicate_names();
    auto is_known = [&](const std::string& p) { return std::find(known.begin(), known.end(), p) != known.end(); };
    for (const auto& p : c.task.base.failure_predicates)
      check(is_known(p), "task.failure_predicates", "unknown predicate '" + p + "'");
    for (const auto& p : c.task.root_failures)
      check(is_known(p), "task.root_failures", "unknown predicate '" + p + "'");
  }
  check(c.task.base.max_steps >= 1, "task.max_steps", "must be at least 1");
  check(c.task.gamma > 0.0 && c.task.gamma < 1.0, "gamma", "must lie in (0, 1)");
  check(ppo.lambda >= 0.0 && ppo.lambda <= 1.0, "lambda", "must lie in [0, 1]");
  check(ppo.clip > 0.0, "ppo.clip", "must be positive");
  check(ppo.epochs >= 1, "ppo.epochs", "must be at least 1");
  check(ppo.minibatch >= 1, "ppo.minibatch", "must be at least 1");
  check(ppo.batch_steps >= 1, "ppo.batch_steps", "must be at least 1");
  check(ppo.step_size > 0.0, "ppo.step_size", "must be positive");
  check(ppo.value_step_size > 0.0, "ppo.value_step_size", "must be positive");
  check(ppo.entropy_coef >= 0.0, "ppo.entropy_coef", "must be non-negative");
  check(ppo.max_grad_norm > 0.0, "ppo.max_grad_norm", "must be positive");
  check(ppo.kl_cap > 0.0, "ppo.kl_cap", "must be positive");
  check_hidden(check, r.search.network.policy_hidden, "network.policy_hidden");
  check_hidden(check, r.search.network.value_hidden, "network.value_hidden");
  check(r.alpha >= 0.0 && std::isfinite(r.alpha), "relay.alpha", "must be finite and non-negative");
  check(r.chain_cap >= 1, "relay.chain_cap", "must be at least 1");
  check(r.node_budget >= 1, "relay.node_budget", "must be positive");
  check(r.total_budget >= r.node_budget, "relay.total_budget", "must be at least relay.node_budget");
  check(r.calibration_rollouts >= 20, "relay.calibration_rollouts", "must be at least 20");
  check(r.holdout_fraction > 0.0 && r.holdout_fraction < 1.0, "relay.holdout_fraction", "must lie in (0, 1)");
  check(r.success_rate > 0.0 && r.success_rate <= 1.0, "relay.success_rate", "must lie in (0, 1]");
  check(r.success_episodes >= 1, "relay.success_episodes", "must be at least 1");
  check(r.eval_episodes >= 1, "relay.eval_episodes", "must be at least 1");
  check(r.curve_every >= 0, "relay.curve_every", "must be non-negative");
  check(r.search.confirm_iterations >= 1, "relay.confirm_iterations", "must be at least 1");
  check(r.w_samples >= 1, "relay.w_samples", "must be at least 1");
  check(r.refine_config.rollouts >= 0, "refine.rollouts", "must be non-negative");
  check(r.refine_config.epochs >= 0, "refine.epochs", "must be non-negative");
  check(r.refine_config.minibatch >= 1, "refine.minibatch", "must be at least 1");
  check(r.refine_config.step_size > 0.0, "refine.step_size", "must be positive");
  check(r.eq2.max_iterations >= 1, "eq2.max_iterations", "must be at least 1");
  check(r.eq2.initial_step > 0.0, "eq2.initial_step", "must be positive");
  check(r.eq2.min_step > 0.0, "eq2.min_step", "must be positive");
  check(r.eq2.tolerance >= 0.0, "eq2.tolerance", "must be non-negative");
  check(c.epsilon >= 0.0 && std::isfinite(c.epsilon), "multichain.epsilon", "must be finite and non-negative");
  check(c.pipeline == Pipeline::Relay || !c.chain_seeds.empty(), "multichain.seeds",
        "the multichain pipeline needs at least one seed");
  check(!c.seeds.empty(), "seeds", "needs at least one seed");
  bool alphas_ok = !c.alpha_sweep.empty();
  for (double a : c.alpha_sweep) alphas_ok = alphas_ok && a >= 0.0 && std::isfinite(a);
  check(alphas_ok, "alpha_sweep", "needs finite non-negative values");

  if (!issues.empty()) throw ConfigError(std::move(issues));
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open config " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Config, "cannot parse config " + path + ": " + e.what());
  }
  // A manifest carries the config it was written for.
  if (doc.is_object() && doc.contains("manifest_version") && doc.contains("config")) return parse_config(doc["config"]);
  return parse_config(doc);
}

json to_json(const ExperimentConfig& c) {
  const auto& r = c.relay;
  const auto& ppo = r.search.ppo;
  const json env = env_to_json(c.env);
  json seeds = json::array();
  for (const auto& s : c.chain_seeds) seeds.push_back(dist_json(s));
  json baselines = json::array();
  for (auto b : c.baselines) baselines.push_back(to_string(b));
  return {
      {"pipeline", to_string(c.pipeline)},
      {"env", env},
      {"task",
       {{"rho", dist_json(c.task.rho)},
        {"rho0", dist_json(c.task.rho0)},
        {"max_steps", c.task.base.max_steps},
        {"failure_predicates", c.task.base.failure_predicates},
        {"root_failures", c.task.root_failures}}},
      {"gamma", c.task.gamma},
      {"lambda", ppo.lambda},
      {"ppo",
       {{"clip", ppo.clip},
        {"epochs", ppo.epochs},
        {"minibatch", ppo.minibatch},
        {"batch_steps", ppo.batch_steps},
        {"step_size", ppo.step_size},
        {"value_step_size", ppo.value_step_size},
        {"entropy_coef", ppo.entropy_coef},
        {"max_grad_norm", ppo.max_grad_norm},
        {"kl_cap", ppo.kl_cap}}},
      {"network", {{"policy_hidden", r.search.network.policy_hidden}, {"value_hidden", r.search.network.value_hidden}}},
      {"relay",
       {{"alpha", r.alpha},
        {"chain_cap", r.chain_cap},
        {"node_budget", r.node_budget},
        {"total_budget", r.total_budget},
        {"calibration_rollouts", r.calibration_rollouts},
        {"holdout_fraction", r.holdout_fraction},
        {"refine", r.refine},
        {"success_rate", r.success_rate},
        {"success_episodes", r.success_episodes},
        {"eval_episodes", r.eval_episodes},
        {"curve_every", r.curve_every},
        {"confirm_iterations", r.search.confirm_iterations},
        {"w_samples", r.w_samples}}},
      {"refine",
       {{"rollouts", r.refine_config.rollouts},
        {"epochs", r.refine_config.epochs},
        {"minibatch", r.refine_config.minibatch},
        {"step_size", r.refine_config.step_size}}},
      {"eq2",
       {{"max_iterations", r.eq2.max_iterations},
        {"initial_step", r.eq2.initial_step},
        {"min_step", r.eq2.min_step},
        {"tolerance", r.eq2.tolerance}}},
      {"execution",
       {{"mode", to_string(r.mode)}, {"junction", r.junction == JunctionChoice::Value ? "value" : "random"}}},
      {"multichain", {{"epsilon", c.epsilon}, {"seeds", seeds}}},
      {"seeds", c.seeds},
      {"baselines", baselines},
      {"alpha_sweep", c.alpha_sweep},
  };
}

json env_to_json(const EnvConfig& env) {
  json out = {{"name", env.name}};
  out["params"] = env.name == "pointmass" ? pointmass_json(env.pointmass) : cartpole_json(env.cartpole);
  return out;
}

EnvConfig env_from_json(const json& doc) {
  std::vector<std::string> issues;
  EnvConfig env;
  Section s(&doc, "env", issues);
  s.field("name", env.name);
  if (env.name == "cartpole") read_cartpole(s.section("params"), env.cartpole);
  else if (env.name == "pointmass") read_pointmass(s.section("params"), env.pointmass);
  else issues.push_back("env.name: unknown environment '" + env.name + "'");
  s.finish();
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return env;
}

std::shared_ptr<const Environment> make_environment(const EnvConfig& env) {
  if (env.name == "cartpole") return std::make_shared<CartPole>(env.cartpole);
  if (env.name == "pointmass") return std::make_shared<PointMass>(env.pointmass);
  fail(ErrorCode::Config, "env.name: unknown environment '" + env.name + "'");
}

RelayTask make_task(const ExperimentConfig& config) {
  RelayTask task = config.task;
  task.env = make_environment(config.env);
  task.validate();
  return task;
}

}  // namespace relaynet
