#include <cmath>
#include <numbers>

#include "doctest.h"
#include "relaynet/cartpole.hpp"
#include "relaynet/error.hpp"
#include "relaynet/multichain.hpp"

using namespace relaynet;

namespace {

GaussianDist dist(double m, double v = 1.0) { return {{m, 0.0, 0.0, 0.0}, {v, v, v, v}}; }

RelayEdge edge(int from, int to, long samples) {
  RelayEdge e;
  e.from = from;
  e.to = to;
  ValueFunction vf;
  vf.features = FeatureMap::identity(4);
  vf.net = MlpParams::zeros({4, 1});
  GaussianPolicy p;
  p.features = FeatureMap::identity(4);
  p.mean_net = MlpParams::zeros({4, 1});
  p.log_std = {0.0};
  p.action_scale = {1.0};
  e.policy = std::make_shared<const GaussianPolicy>(p);
  e.value = std::make_shared<const ValueFunction>(vf);
  e.samples = samples;
  return e;
}

}  // namespace

TEST_SUITE("multichain") {
  TEST_CASE("symmetric KL of unit Gaussians two apart is 2") {
    const GaussianDist a{{0.0}, {1.0}};
    const GaussianDist b{{2.0}, {1.0}};
    CHECK(distribution_similarity(a, b) == doctest::Approx(2.0));
    CHECK(distribution_similarity(b, a) == doctest::Approx(2.0));
    CHECK(distribution_similarity(a, a) == 0.0);
  }

  TEST_CASE("variance ratio term matches the closed form") {
    const GaussianDist a{{0.0}, {1.0}};
    const GaussianDist b{{0.0}, {4.0}};
    // 0.5 * (KL(a|b) + KL(b|a)) = 0.25 * (4 + 1/4 - 2)
    CHECK(distribution_similarity(a, b) == doctest::Approx(0.25 * (4.0 + 0.25 - 2.0)));
  }

  TEST_CASE("zero variances are floored instead of dividing by zero") {
    const GaussianDist a{{0.0}, {0.0}};
    const GaussianDist b{{1e-4}, {0.0}};
    const double s = distribution_similarity(a, b);
    CHECK(std::isfinite(s));
    CHECK(s == doctest::Approx(0.25 * 1e-8 * (2.0 / kVarianceFloor)));
  }

  TEST_CASE("periodic coordinates wrap the mean difference") {
    const CartPole env;
    const GaussianDist a{{std::numbers::pi - 0.1, 0, 0, 0}, {1, 1, 1, 1}};
    const GaussianDist b{{-std::numbers::pi + 0.1, 0, 0, 0}, {1, 1, 1, 1}};
    CHECK(distribution_similarity(a, b, &env) == doctest::Approx(0.25 * 0.04 * 2.0));
    CHECK(distribution_similarity(a, b) > 10.0);
  }

  TEST_CASE("registry matches only other chains and picks the closest") {
    RelayGraph g;
    g.add_node(dist(0.0), 0, 0);
    g.add_node(dist(0.5), 0, 1);
    g.add_node(dist(0.1), 1, 0);
    ChainRegistry reg(0.5);
    reg.add_chain(g, 0);
    reg.add_chain(g, 1);
    CHECK(reg.entries().size() == 3);

    const auto m = reg.lookup(dist(0.45), 2, nullptr);
    REQUIRE(m.has_value());
    CHECK(m->entry.node == 2);
    CHECK(m->similarity == doctest::Approx(0.00125));

    const auto own = reg.lookup(dist(0.45), 0, nullptr);
    REQUIRE(own.has_value());
    CHECK(own->entry.chain == 1);

    CHECK_FALSE(reg.lookup(dist(5.0), 2, nullptr).has_value());
    CHECK_FALSE(ChainRegistry(0.0).lookup(dist(0.0), 2, nullptr).has_value());
    CHECK_THROWS_AS(ChainRegistry(-1.0), Error);
  }

  TEST_CASE("merge savings count the matched chain beyond the junction") {
    RelayGraph g;
    const int a0 = g.add_node(dist(0.0), 0, 0);
    const int a1 = g.add_node(dist(1.0), 0, 1);
    const int a2 = g.add_node(dist(2.0), 0, 2);
    const int b0 = g.add_node(dist(-3.0), 1, 0);
    g.add_edge(edge(a0, RelayGraph::kRoot, 100));
    g.add_edge(edge(a1, a0, 200));
    g.add_edge(edge(a2, a1, 400));
    g.add_edge(edge(b0, RelayGraph::kRoot, 50));
    g.add_edge(edge(b0, a1, 0));  // junction edge

    const MergeRecord m{a1, b0, 0.1, 0};
    CHECK(estimate_merge_savings(g, m) == 400);
    CHECK(estimate_merge_savings(g, m, {{a2, 7}, {a0, 1000}}) == 7);
    CHECK(estimate_merge_savings(g, MergeRecord{a0, b0, 0.1, 0}) == 600);
  }

  TEST_CASE("multichain construction validates its seeds") {
    RelayTask task;
    task.env = std::make_shared<CartPole>();
    task.rho = dist(0.0);
    task.rho0 = dist(0.0);
    task.base.max_steps = 10;
    CHECK_THROWS_AS(learn_multi_relay_networks(task, {}, 0.5, RelayConfig{}, 1), Error);
    CHECK_THROWS_AS(learn_multi_relay_networks(task, {GaussianDist{{0.0}, {1.0}}}, 0.5, RelayConfig{}, 1), Error);
  }
}
