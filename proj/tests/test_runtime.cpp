#include <cmath>
#include <limits>

#include "doctest.h"
#include "relaynet/error.hpp"
#include "relaynet/experiment.hpp"
#include "relaynet/pointmass.hpp"
#include "relaynet/runtime.hpp"

using namespace relaynet;

namespace {

// Constant-force policy on identity features.
std::shared_ptr<const GaussianPolicy> push(double fx, double fy) {
  GaussianPolicy p;
  p.features = FeatureMap::identity(4);
  p.mean_net = MlpParams::zeros({4, 2});
  p.mean_net.biases[0][0] = fx;
  p.mean_net.biases[0][1] = fy;
  p.log_std = {0.0, 0.0};
  p.action_scale = {1.0, 1.0};
  return std::make_shared<const GaussianPolicy>(p);
}

// V(s) = scale * (c . s) + shift.
std::shared_ptr<const ValueFunction> linear_value(std::vector<double> c, double scale = 1.0, double shift = 0.0) {
  ValueFunction v;
  v.features = FeatureMap::identity(4);
  v.net = MlpParams::zeros({4, 1});
  for (std::size_t i = 0; i < 4; ++i) v.net.weights[0](0, i) = c[i];
  v.out_scale = scale;
  v.out_shift = shift;
  return std::make_shared<const ValueFunction>(v);
}

const GaussianDist kNear{{0.0, 0.0, 0.0, 0.0}, {0.01, 0.01, 0.01, 0.01}};

// Root edge pulls nothing, V0 = -x, threshold -0.45; the child pushes toward
// the goal with V1 = 0.
RelayGraph two_node_graph(double scale = 1.0, double shift = 0.0) {
  RelayGraph g;
  const int root = g.add_node(kNear, 0, 0);
  const int child = g.add_node(kNear, 0, 1);
  RelayEdge e0;
  e0.from = root;
  e0.to = RelayGraph::kRoot;
  e0.policy = push(0.0, 0.0);
  e0.value = linear_value({-1, 0, 0, 0}, scale, shift);
  e0.threshold = scale * -0.45 + shift;
  e0.failure_predicates = {PointMass::kOutsideArena};
  g.add_edge(e0);
  RelayEdge e1 = e0;
  e1.from = child;
  e1.to = root;
  e1.policy = push(-1.0, 0.0);
  e1.value = linear_value({0, 0, 0, 0}, scale, shift);
  e1.threshold = shift;
  g.add_edge(e1);
  return g;
}

RelayTask pointmass_task(int max_steps) {
  RelayTask task;
  task.env = std::make_shared<PointMass>();
  task.rho = {{2.0, 0.0, 0.0, 0.0}, {0.04, 0.04, 0.01, 0.01}};
  task.rho0 = {{0.5, 0.0, 0.0, 0.0}, {0.04, 0.04, 0.01, 0.01}};
  task.base.max_steps = max_steps;
  task.base.failure_predicates = {PointMass::kOutsideArena};
  return task;
}

RelayConfig small_config() {
  RelayConfig c;
  c.search.ppo.batch_steps = 500;
  c.search.network = {{8}, {8}};
  c.eval_episodes = 4;
  c.success_episodes = 4;
  c.curve_every = 0;
  return c;
}

RelayArtifacts small_artifacts(const RelayTask& task) {
  RelayArtifacts a;
  a.rhos = {task.rho0, task.rho};
  a.node_samples = {1000, 1500};
  a.hidden_sum = {16};
  a.total_samples = 2500;
  return a;
}

}  // namespace

TEST_SUITE("runtime-eval") {
  TEST_CASE("control passes to the parent on the first step its value crosses the threshold") {
    const PointMass env;
    const auto g = two_node_graph();
    ExecutionOptions opt;
    opt.max_steps = 200;
    Rng rng(1);
    const auto trace = execute_graph(g, env, {1.0, 0.0, 0.0, 0.0}, opt, rng);

    // Closed form under unit force from rest: x_k = 1 - (k dt)^2 / 2.
    const double dt = env.params().timestep * env.params().frame_skip;
    int expected = -1;
    for (int k = 0; k < 200 && expected < 0; ++k) {
      const double x = 1.0 - 0.5 * (k * dt) * (k * dt);
      if (-x > -0.45) expected = k;
    }
    REQUIRE(expected > 0);
    REQUIRE(trace.switches.size() == 1);
    CHECK(trace.switches[0].step == expected);
    CHECK(trace.switches[0].from_edge == 1);
    CHECK(trace.switches[0].to_edge == 0);
    CHECK(trace.active_edge[static_cast<std::size_t>(expected - 1)] == 1);
    CHECK(trace.active_edge[static_cast<std::size_t>(expected)] == 0);
    CHECK(first_crossing_holds(g, trace));
    CHECK(trace.succeeded);
    CHECK(trace.cause == TerminalCause::Timeout);
  }

  TEST_CASE("start edge is the argmax of the values") {
    const PointMass env;
    const auto g = two_node_graph();
    ExecutionOptions opt;
    opt.max_steps = 1;
    Rng rng(2);
    // V0(-3) < V1(0): the child starts; at x = -1, V0 = 1 > V1 and the parent starts.
    CHECK(execute_graph(g, env, {3.0, 0.0, 0.0, 0.0}, opt, rng).active_edge[0] == 1);
    CHECK(execute_graph(g, env, {-1.0, 0.0, 0.0, 0.0}, opt, rng).active_edge[0] == 0);
  }

  TEST_CASE("a monotone rescaling of every value leaves execution unchanged") {
    const PointMass env;
    const auto a = two_node_graph();
    const auto b = two_node_graph(3.0, 7.0);
    ExecutionOptions opt;
    opt.max_steps = 150;
    for (double x0 : {3.0, 1.0, 0.2, -1.0}) {
      Rng r1(3), r2(3);
      const auto ta = execute_graph(a, env, {x0, 0.0, 0.0, 0.0}, opt, r1);
      const auto tb = execute_graph(b, env, {x0, 0.0, 0.0, 0.0}, opt, r2);
      CHECK(ta.active_edge == tb.active_edge);
      CHECK(ta.states == tb.states);
    }
  }

  TEST_CASE("a single node never switches") {
    const PointMass env;
    RelayGraph g;
    const int n = g.add_node(kNear, 0, 0);
    RelayEdge e;
    e.from = n;
    e.to = RelayGraph::kRoot;
    e.policy = push(-1.0, 0.5);
    e.value = linear_value({-1, 0, 0, 0});
    e.threshold = -100.0;
    g.add_edge(e);
    ExecutionOptions opt;
    opt.max_steps = 100;
    Rng rng(4);
    const auto t = execute_graph(g, env, {1.0, 0.0, 0.0, 0.0}, opt, rng);
    CHECK(t.switches.empty());
    CHECK(t.length() == 100);
  }

  TEST_CASE("constant reward gives the closed-form discounted return") {
    const PointMass env;
    RelayGraph g;
    const int n = g.add_node(kNear, 0, 0);
    RelayEdge e;
    e.from = n;
    e.to = RelayGraph::kRoot;
    e.policy = push(0.0, 0.0);
    e.value = linear_value({0, 0, 0, 0});
    g.add_edge(e);
    ExecutionOptions opt;
    opt.max_steps = 40;
    opt.gamma = 0.9;
    Rng rng(5);
    // Standing still 3 m from the goal: r = 2 - 3 every step.
    const auto stats = evaluate_graph(g, env, {{3.0, 0.0, 0.0, 0.0}, {0.0, 0.0, 0.0, 0.0}}, 5, opt, rng);
    CHECK(stats.mean_return == doctest::Approx(-(1.0 - std::pow(0.9, 40)) / (1.0 - 0.9)).epsilon(1e-12));
    CHECK(stats.stderr_ == 0.0);
    CHECK(stats.success_rate == 1.0);
  }

  TEST_CASE("stderr is the sample standard deviation over sqrt(n)") {
    CHECK(sample_stderr({1.0, 2.0, 3.0, 4.0}) == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
    CHECK(sample_stderr({7.0}) == 0.0);
  }

  TEST_CASE("testing curve with no checkpoints is header-only") {
    const auto rows = testing_curve({}, pointmass_task(10), 3, ExecutionOptions{}, 1, "AUTO");
    CHECK(rows.empty());
    CHECK(curve_csv(rows) == "samples,mean_return,stderr,label\n");
  }

  TEST_CASE("every checkpoint sees the same start states") {
    const auto task = pointmass_task(30);
    const auto g = two_node_graph();
    ExecutionOptions opt;
    opt.max_steps = 30;
    const auto rows = testing_curve({{10, &g}, {20, &g}}, task, 6, opt, 9, "AUTO");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].mean_return == rows[1].mean_return);
    CHECK(rows[1].samples == 20);
  }

  TEST_CASE("minus-infinity threshold predicts every start as good") {
    const auto task = pointmass_task(20);
    SubtaskSpec spec;
    spec.env = task.env;
    spec.rho = task.rho;
    spec.termination = task.base;
    Rng rng(6);
    const auto c = confusion_eval(*linear_value({1, 0, 0, 0}), -std::numeric_limits<double>::infinity(),
                                  *push(0.0, 0.0), spec, 25, rng);
    CHECK(c.tp + c.fp == 25);
    CHECK(c.fn + c.tn == 0);
  }

  TEST_CASE("ONE spends the relay budget with summed widths") {
    const auto task = pointmass_task(50);
    const auto art = small_artifacts(task);
    const auto one = train_baseline(BaselineKind::ONE, task, art, small_config(), 3);
    CHECK(one.samples >= art.total_samples);
    CHECK(one.samples < art.total_samples + 500 + 50);
    CHECK(one.graph.edges().size() == 1);
    CHECK(one.graph.edges()[0].policy->mean_net.layer_sizes[1] == 16);
    REQUIRE_FALSE(one.curve.empty());
    CHECK(one.curve.back().label == "ONE");
  }

  TEST_CASE("NR trains one independent policy per relay node") {
    const auto task = pointmass_task(50);
    const auto art = small_artifacts(task);
    const auto nr = train_baseline(BaselineKind::NR, task, art, small_config(), 3);
    REQUIRE(nr.stage_samples.size() == 2);
    for (std::size_t k = 0; k < 2; ++k) {
      CHECK(nr.stage_samples[k] >= art.node_samples[k]);
      CHECK(nr.stage_samples[k] < art.node_samples[k] + 500 + 50);
    }
    CHECK(nr.graph.edges().size() == 2);
    for (const auto& e : nr.graph.edges()) CHECK(e.to == RelayGraph::kRoot);
    CHECK(nr.curve.size() == 2);
  }

  TEST_CASE("NR over a single node matches ONE's structure") {
    const auto task = pointmass_task(50);
    auto art = small_artifacts(task);
    art.rhos = {task.rho};
    art.node_samples = {1000};
    art.total_samples = 1000;
    const auto nr = train_baseline(BaselineKind::NR, task, art, small_config(), 4);
    const auto one = train_baseline(BaselineKind::ONE, task, art, small_config(), 4);
    CHECK(nr.graph.edges().size() == one.graph.edges().size());
    CHECK(nr.graph.node(1).rho == one.graph.node(1).rho);
    CHECK(nr.stage_samples.size() == one.stage_samples.size());
  }

  TEST_CASE("CL warm-starts each stage from the previous result") {
    const auto task = pointmass_task(50);
    const auto art = small_artifacts(task);
    const auto cl = train_baseline(BaselineKind::CL, task, art, small_config(), 5);
    REQUIRE(cl.stage_end.size() == 2);
    REQUIRE(cl.stage_start.size() == 1);
    CHECK(cl.stage_start[0] == cl.stage_end[0]);
    CHECK(cl.samples == cl.stage_samples[0] + cl.stage_samples[1]);
    CHECK(*cl.graph.edges()[0].policy == cl.stage_end[1]);
  }

  TEST_CASE("baselines reject missing artifacts") {
    const auto task = pointmass_task(50);
    CHECK_THROWS_AS(train_baseline(BaselineKind::ONE, task, RelayArtifacts{}, small_config(), 1), Error);
    CHECK_THROWS_AS(parse_baseline("TWO"), Error);
  }
}
