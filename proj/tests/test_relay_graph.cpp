#include <cmath>
#include <limits>

#include "doctest.h"
#include "relaynet/error.hpp"
#include "relaynet/pointmass.hpp"
#include "relaynet/relay_graph.hpp"

using namespace relaynet;

namespace {

InitialMeanProblem quadratic_problem(double w) {
  InitialMeanProblem p;
  p.value = [](std::span<const double> s, std::span<double> g) {
    double v = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      v -= s[i] * s[i];
      if (!g.empty()) g[i] = -2.0 * s[i];
    }
    return v;
  };
  p.threshold = -1.0;
  p.target = {2.0, 0.0};
  p.w = w;
  return p;
}

RelayEdge make_edge(int from, int to, Rng& rng) {
  const PointMass env;
  RelayEdge e;
  e.from = from;
  e.to = to;
  e.policy = std::make_shared<const GaussianPolicy>(GaussianPolicy::create(env.features(), {4}, 2, rng));
  e.value = std::make_shared<const ValueFunction>(ValueFunction::create(env.features(), {4}, rng));
  e.threshold = 0.0;
  return e;
}

const GaussianDist kDist{{0, 0, 0, 0}, {1, 1, 1, 1}};

}  // namespace

TEST_SUITE("relay-graph") {
  TEST_CASE("initial-mean solver lands on the analytic optimum") {
    for (double w : {0.25, 1.0, 4.0}) {
      const auto r = next_initial_mean(quadratic_problem(w), std::vector<double>{0.2, 0.1});
      CHECK(std::abs(r.mean[0] - 1.0) < 1e-3);
      CHECK(std::abs(r.mean[1]) < 1e-3);
      CHECK(-(r.mean[0] * r.mean[0] + r.mean[1] * r.mean[1]) >= -1.0 - 1e-9);
      CHECK_FALSE(r.stalled);
    }
  }

  TEST_CASE("initial-mean solver keeps every iterate feasible under an extra constraint") {
    auto p = quadratic_problem(1.0);
    p.feasible = [](std::span<const double> s) { return s[0] <= 0.5; };
    const auto r = next_initial_mean(p, std::vector<double>{0.0, 0.0});
    CHECK(r.mean[0] <= 0.5);
    CHECK(r.mean[0] > 0.45);
  }

  TEST_CASE("infeasible starting mean is rejected") {
    CHECK_THROWS_AS(next_initial_mean(quadratic_problem(1.0), std::vector<double>{3.0, 0.0}), Error);
  }

  TEST_CASE("w heuristic") {
    const std::vector<double> values{-4.0, 2.0, 6.0};
    const std::vector<double> dist{1.0, 2.0, 8.0};
    CHECK(choose_w(values, dist) == doctest::Approx(4.0 / 2.0));
    const std::vector<double> zeros{0.0, 0.0, 0.0};
    CHECK(choose_w(values, zeros) == 1.0);
  }

  TEST_CASE("fresh graph holds only the dummy root") {
    const RelayGraph g;
    CHECK(g.nodes().size() == 1);
    CHECK(g.chain_node_count() == 0);
    CHECK(g.edges().empty());
    CHECK_NOTHROW(g.validate());
  }

  TEST_CASE("edge validation") {
    Rng rng(1);
    RelayGraph g;
    const int a = g.add_node(kDist, 0, 0);
    const int b = g.add_node(kDist, 0, 1);
    const int c = g.add_node(kDist, 1, 0);
    CHECK_THROWS_AS(g.add_edge(make_edge(RelayGraph::kRoot, a, rng)), Error);
    CHECK_THROWS_AS(g.add_edge(make_edge(a, a, rng)), Error);
    auto bad = make_edge(a, RelayGraph::kRoot, rng);
    bad.threshold = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(g.add_edge(bad), Error);
    bad = make_edge(a, RelayGraph::kRoot, rng);
    bad.policy = nullptr;
    CHECK_THROWS_AS(g.add_edge(bad), Error);

    g.add_edge(make_edge(a, RelayGraph::kRoot, rng));
    g.add_edge(make_edge(b, a, rng));
    CHECK_THROWS_AS(g.add_edge(make_edge(a, b, rng)), Error);  // cycle
    g.add_edge(make_edge(c, RelayGraph::kRoot, rng));
    g.add_edge(make_edge(c, b, rng));                          // junction
    CHECK_THROWS_AS(g.add_edge(make_edge(c, a, rng)), Error);  // third out-edge
    CHECK(g.reaches_root(b));
    CHECK(g.out_edges(c).size() == 2);
    const auto up = g.ancestors(b);
    CHECK(std::find(up.begin(), up.end(), a) != up.end());
    CHECK(std::find(up.begin(), up.end(), RelayGraph::kRoot) != up.end());
    CHECK_NOTHROW(g.validate());
  }

  TEST_CASE("chain subgraph keeps one chain and renumbers it") {
    Rng rng(2);
    RelayGraph g;
    const int a = g.add_node(kDist, 0, 0);
    const int b = g.add_node(kDist, 1, 0);
    const int c = g.add_node(kDist, 1, 1);
    g.add_edge(make_edge(a, RelayGraph::kRoot, rng));
    g.add_edge(make_edge(b, RelayGraph::kRoot, rng));
    g.add_edge(make_edge(c, b, rng));
    g.add_edge(make_edge(c, a, rng));
    const auto sub = chain_subgraph(g, 1);
    CHECK(sub.chain_node_count() == 2);
    CHECK(sub.edges().size() == 2);
    CHECK(sub.edges()[1].from == 2);
    CHECK(sub.edges()[1].to == 1);
  }

  TEST_CASE("augmenting a termination set leaves the base untouched") {
    TerminationSet base;
    base.max_steps = 7;
    base.failure_predicates = {"outside_arena"};
    Rng rng(3);
    auto vf = std::make_shared<const ValueFunction>(ValueFunction::create(FeatureMap::identity(4), {2}, rng));
    const auto t = augment_termination(base, vf, 1.5);
    CHECK_FALSE(base.value_threshold.has_value());
    CHECK(t.value_threshold->threshold == 1.5);
    CHECK(t.max_steps == 7);
    CHECK(t.failure_predicates == base.failure_predicates);
  }

  TEST_CASE("task validation") {
    RelayTask task;
    task.env = std::make_shared<PointMass>();
    task.rho = kDist;
    task.rho0 = kDist;
    task.base.max_steps = 10;
    task.base.failure_predicates = {"outside_arena"};
    CHECK_NOTHROW(task.validate());
    task.root_failures = {"no_such_predicate"};
    CHECK_THROWS_AS(task.validate(), Error);
    task.root_failures = {};
    task.gamma = 1.0;
    CHECK_THROWS_AS(task.validate(), Error);
  }
}
