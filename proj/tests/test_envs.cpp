#include <cmath>
#include <numbers>

#include "doctest.h"
#include "relaynet/cartpole.hpp"
#include "relaynet/error.hpp"
#include "relaynet/pointmass.hpp"
#include "relaynet/policy.hpp"

using namespace relaynet;

TEST_SUITE("envs") {
  TEST_CASE("unforced cartpole conserves energy") {
    CartPoleParams p;
    p.frame_skip = 1;
    const CartPole env(p);
    std::vector<double> s{2.0, 0.5, 0.0, 0.3};
    const double e0 = env.energy(s);
    const std::vector<double> zero{0.0};
    for (int i = 0; i < 5000; ++i) env.step(s, zero);  // 10 s
    CHECK(std::abs(env.energy(s) - e0) < 1e-6 * std::max(1.0, std::abs(e0)));
  }

  TEST_CASE("upright pole is an equilibrium and hanging pole is stable") {
    const CartPole env;
    std::vector<double> up{0.0, 0.0, 0.0, 0.0};
    std::vector<double> down{std::numbers::pi, 0.0, 0.0, 0.0};
    const std::vector<double> zero{0.0};
    for (int i = 0; i < 100; ++i) {
      env.step(up, zero);
      env.step(down, zero);
    }
    CHECK(up[0] == 0.0);
    CHECK(std::abs(std::abs(down[0]) - std::numbers::pi) < 1e-12);
  }

  TEST_CASE("force pushes the cart and tips the pole the other way") {
    const CartPole env;
    const auto acc = env.accelerations(std::vector<double>{0.0, 0.0, 0.0, 0.0}, 10.0);
    CHECK(acc[1] == doctest::Approx(10.0));
    CHECK(acc[0] < 0.0);
  }

  TEST_CASE("cartpole force is clamped to the bound") {
    const CartPole env;
    std::vector<double> a{0.0, 0.0, 0.0, 0.0}, b = a;
    env.step(a, std::vector<double>{1e6});
    env.step(b, std::vector<double>{env.params().force_bound});
    CHECK(a == b);
  }

  TEST_CASE("cartpole angle stays wrapped") {
    const CartPole env;
    std::vector<double> s{3.1, 8.0, 0.0, 0.0};
    const std::vector<double> zero{0.0};
    for (int i = 0; i < 50; ++i) {
      env.step(s, zero);
      CHECK(s[0] > -std::numbers::pi);
      CHECK(s[0] <= std::numbers::pi);
    }
  }

  TEST_CASE("cartpole failure predicates") {
    const CartPole env;
    CHECK(env.failure(CartPole::kPoleBelowHorizontal, std::vector<double>{2.0, 0, 0, 0}));
    CHECK_FALSE(env.failure(CartPole::kPoleBelowHorizontal, std::vector<double>{1.0, 0, 0, 0}));
    CHECK(env.failure(CartPole::kCartOffTrack, std::vector<double>{0, 0, 3.5, 0}));
    CHECK_FALSE(env.failure(CartPole::kCartOffTrack, std::vector<double>{0, 0, 2.5, 0}));
    CHECK_THROWS_AS(env.failure("nope", std::vector<double>{0, 0, 0, 0}), Error);
  }

  TEST_CASE("cartpole reward") {
    CartPoleParams p;
    p.control_cost = 0.01;
    const CartPole env(p);
    CHECK(env.reward(std::vector<double>{0, 0, 0, 0}, std::vector<double>{0.0}) == doctest::Approx(3.0));
    CHECK(env.reward(std::vector<double>{std::numbers::pi, 0, 1.0, 0}, std::vector<double>{10.0}) ==
          doctest::Approx(-1.0 - 1.0 - 1.0 + 2.0));
  }

  TEST_CASE("non-finite state is rejected") {
    const CartPole env;
    std::vector<double> s{std::nan(""), 0, 0, 0};
    CHECK_THROWS_AS(env.step(s, std::vector<double>{0.0}), Error);
  }

  TEST_CASE("point mass integrates a constant force exactly") {
    PointMassParams p;
    p.frame_skip = 10;
    const PointMass env(p);
    std::vector<double> s{1.0, -1.0, 0.5, 0.0};
    env.step(s, std::vector<double>{2.0, -1.0});
    const double t = 10 * p.timestep;
    CHECK(s[0] == doctest::Approx(1.0 + 0.5 * t + 0.5 * 2.0 * t * t).epsilon(1e-12));
    CHECK(s[1] == doctest::Approx(-1.0 - 0.5 * t * t).epsilon(1e-12));
    CHECK(s[2] == doctest::Approx(0.5 + 2.0 * t).epsilon(1e-12));
    CHECK(s[3] == doctest::Approx(-t).epsilon(1e-12));
  }

  TEST_CASE("termination precedence is failure, then value threshold, then timeout") {
    const PointMass env;
    Rng rng(1);
    auto vf = std::make_shared<ValueFunction>(ValueFunction::create(env.features(), {4}, rng));
    vf->net.set_zero();
    vf->out_shift = 1.0;  // V == 1 everywhere
    TerminationSet t;
    t.max_steps = 3;
    t.failure_predicates = {PointMass::kOutsideArena};
    t.value_threshold = ValueThreshold{vf, 0.0};
    const std::vector<double> outside{10.0, 0.0, 0.0, 0.0};
    const std::vector<double> inside{1.0, 0.0, 0.0, 0.0};
    CHECK(check_termination(env, t, outside, 3) == TerminalCause::Failure);
    CHECK(check_termination(env, t, inside, 3) == TerminalCause::ValueThreshold);
    t.value_threshold->threshold = 2.0;
    CHECK(check_termination(env, t, inside, 3) == TerminalCause::Timeout);
    CHECK(check_termination(env, t, inside, 2) == TerminalCause::None);
    t.value_threshold->value_fn = nullptr;
    CHECK_THROWS_AS(check_termination(env, t, inside, 0), Error);
  }

  TEST_CASE("initial states respect the constraint or fail loudly") {
    const PointMass env;
    Rng rng(4);
    const GaussianDist ok{{5.5, 0, 0, 0}, {0.25, 0.25, 0.01, 0.01}};
    for (int i = 0; i < 200; ++i) CHECK(env.constraint(sample_initial(env, ok, 1.5, rng)) >= 0.0);
    const GaussianDist impossible{{50.0, 0, 0, 0}, {1e-4, 1e-4, 1e-4, 1e-4}};
    CHECK_THROWS_AS(sample_initial(env, impossible, 1.0, rng), Error);
  }

  TEST_CASE("sample inflation scales the spread") {
    const PointMass env;
    const GaussianDist d{{0, 0, 0, 0}, {1.0, 1.0, 1.0, 1.0}};
    Rng rng(8);
    double plain = 0.0, inflated = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      const auto a = sample_initial(env, d, 1.0, rng);
      const auto b = sample_initial(env, d, 1.5, rng);
      plain += a[2] * a[2];
      inflated += b[2] * b[2];
    }
    CHECK(plain / n == doctest::Approx(1.0).epsilon(0.05));
    CHECK(inflated / n == doctest::Approx(1.5).epsilon(0.05));
  }

  TEST_CASE("periodic difference wraps") {
    const CartPole env;
    const auto d = env.difference(std::vector<double>{3.0, 0, 0, 0}, std::vector<double>{-3.0, 0, 0, 0});
    CHECK(d[0] == doctest::Approx(6.0 - 2 * std::numbers::pi));
    CHECK(wrap_angle(3 * std::numbers::pi) == doctest::Approx(std::numbers::pi));
  }

  TEST_CASE("distribution validation") {
    CHECK_THROWS_AS((GaussianDist{{0.0}, {-1.0}}.validate()), Error);
    CHECK_THROWS_AS((GaussianDist{{0.0, 1.0}, {1.0}}.validate()), Error);
    CHECK_NOTHROW((GaussianDist{{0.0}, {1.0}}.validate()));
  }
}
