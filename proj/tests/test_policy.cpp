#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "relaynet/error.hpp"
#include "relaynet/optimizer.hpp"
#include "relaynet/pointmass.hpp"

using namespace relaynet;

namespace {

SubtaskSpec pointmass_spec(int max_steps) {
  SubtaskSpec spec;
  spec.env = std::make_shared<PointMass>();
  spec.rho = {{0.5, 0.0, 0.0, 0.0}, {0.04, 0.04, 0.01, 0.01}};
  spec.termination.max_steps = max_steps;
  spec.termination.failure_predicates = {PointMass::kOutsideArena};
  return spec;
}

}  // namespace

TEST_SUITE("policy") {
  TEST_CASE("GAE with lambda 1 and zero values equals discounted sums") {
    const auto check = oracles::gae_bruteforce_check(100, 21);
    CHECK(check.sequences == 100);
    CHECK(check.max_abs_error < 1e-12);
  }

  TEST_CASE("GAE with lambda 0 is the one-step TD residual") {
    Trajectory t;
    t.cause = TerminalCause::Timeout;
    t.bootstrap_value = 2.0;
    for (double v : {0.5, 1.0, 1.5}) {
      Transition tr;
      tr.reward = 1.0;
      tr.value = v;
      t.transitions.push_back(tr);
    }
    const auto a = compute_gae(t, 0.9, 0.0);
    CHECK(a.advantages[0] == doctest::Approx(1.0 + 0.9 * 1.0 - 0.5));
    CHECK(a.advantages[1] == doctest::Approx(1.0 + 0.9 * 1.5 - 1.0));
    CHECK(a.advantages[2] == doctest::Approx(1.0 + 0.9 * 2.0 - 1.5));
    CHECK(a.targets[2] == doctest::Approx(a.advantages[2] + 1.5));
  }

  TEST_CASE("relay bonus enters the last step and the discounted objective") {
    Trajectory t;
    t.cause = TerminalCause::ValueThreshold;
    for (int i = 0; i < 4; ++i) {
      Transition tr;
      tr.reward = 1.0;
      t.transitions.push_back(tr);
    }
    const double gamma = 0.9;
    t.terminal_bonus = 30.0 * 2.0;
    t.relay_bonus = t.terminal_bonus * std::pow(gamma, 4);
    const auto a = compute_gae(t, gamma, 1.0);
    CHECK(a.advantages[0] == doctest::Approx(t.discounted_objective(gamma)));
    CHECK(t.discounted_objective(gamma) == doctest::Approx(1 + 0.9 + 0.81 + 0.729 + 60 * 0.6561));
  }

  TEST_CASE("gaussian log density matches the closed form") {
    const std::vector<double> mean{0.5, -1.0}, log_std{std::log(2.0), 0.0}, x{1.5, 0.0};
    const double expected = -0.5 * 0.25 - std::log(2.0) - 0.5 * 1.0 - std::log(2 * std::numbers::pi);
    CHECK(gaussian_log_prob(mean, log_std, x) == doctest::Approx(expected));
  }

  TEST_CASE("policy log-prob gradient matches finite differences") {
    Rng rng(2);
    const PointMass env;
    GaussianPolicy p = GaussianPolicy::create(env.features(), {5}, 2, rng, 2.0);
    p.log_std = {-0.3, 0.2};
    const std::vector<double> s{1.0, -0.5, 0.3, 0.1};
    const std::vector<double> a{0.7, -1.1};
    PolicyGradient g = PolicyGradient::zeros_like(p);
    PolicyEvaluator eval(p);
    eval.log_prob(s, a, 1.0, &g);
    auto params = p.segments();
    const auto grads = g.segments();
    for (std::size_t k = 0; k < params.size(); ++k)
      for (std::size_t i = 0; i < params[k].size(); ++i) {
        const double keep = params[k][i];
        params[k][i] = keep + 1e-6;
        const double up = p.log_prob(s, a);
        params[k][i] = keep - 1e-6;
        const double down = p.log_prob(s, a);
        params[k][i] = keep;
        CHECK(grads[k][i] == doctest::Approx((up - down) / 2e-6).epsilon(1e-5).scale(1.0));
      }
  }

  TEST_CASE("action scale sets the physical unit") {
    Rng rng(3);
    const PointMass env;
    GaussianPolicy p = GaussianPolicy::create(env.features(), {4}, 2, rng, 3.0);
    p.log_std = {0.0, std::log(0.5)};
    const auto eff = p.effective_log_std();
    CHECK(eff[0] == doctest::Approx(std::log(3.0)));
    CHECK(eff[1] == doctest::Approx(std::log(1.5)));
  }

  TEST_CASE("clipped surrogate gate") {
    CHECK(clipped_surrogate_weight(1.1, 1.0, 0.2) == doctest::Approx(1.1));
    CHECK(clipped_surrogate_weight(1.3, 1.0, 0.2) == 0.0);
    CHECK(clipped_surrogate_weight(0.7, 1.0, 0.2) == doctest::Approx(0.7));
    CHECK(clipped_surrogate_weight(0.7, -1.0, 0.2) == 0.0);
    CHECK(clipped_surrogate_weight(1.3, -1.0, 0.2) == doctest::Approx(-1.3));
  }

  TEST_CASE("advantage normalization") {
    PpoBatch b;
    for (double a : {1.0, 2.0, 3.0, 10.0}) b.append(std::vector<double>{0.0}, std::vector<double>{0.0}, 0.0, a, 0.0);
    normalize_advantages(b);
    double mean = 0.0, var = 0.0;
    for (double a : b.advantage) mean += a / 4;
    for (double a : b.advantage) var += (a - mean) * (a - mean) / 4;
    CHECK(mean == doctest::Approx(0.0).scale(1.0));
    CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
  }

  TEST_CASE("deterministic rollouts repeat exactly and stop on timeout") {
    const auto spec = pointmass_spec(25);
    Rng rng(4);
    const auto policy = GaussianPolicy::create(spec.env->features(), {8}, 2, rng, 2.0);
    Rng r1(9), r2(9);
    const auto a = rollout(spec, policy, nullptr, {0.5, 0.0, 0.0, 0.0}, true, r1);
    const auto b = rollout(spec, policy, nullptr, {0.5, 0.0, 0.0, 0.0}, true, r2);
    CHECK(a.length() == 25);
    CHECK(a.cause == TerminalCause::Timeout);
    for (std::size_t i = 0; i < a.length(); ++i) CHECK(a.transitions[i].next_state == b.transitions[i].next_state);
  }

  TEST_CASE("ppo update raises the likelihood of positive-advantage actions") {
    const auto spec = pointmass_spec(50);
    Rng rng(5);
    auto policy = GaussianPolicy::create(spec.env->features(), {16}, 2, rng, 2.0);
    auto vf = ValueFunction::create(spec.env->features(), {16}, rng);
    PpoConfig cfg;
    cfg.batch_steps = 500;
    cfg.kl_cap = 1.0;
    const auto trajs = collect_rollouts(spec, policy, vf, cfg.batch_steps, rng);
    PpoBatch batch;
    for (const auto& t : trajs)
      for (const auto& tr : t.transitions)
        batch.append(tr.state, tr.action, tr.log_prob, tr.action[0] > 0 ? 1.0 : -1.0, 0.0);
    const auto before = policy;
    auto opt = make_optimizers(policy, vf, cfg);
    ppo_update(policy, vf, opt, batch, cfg, rng);
    double gain = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const std::span<const double> s(batch.states.data() + i * 4, 4);
      const std::span<const double> a(batch.actions.data() + i * 2, 2);
      gain += batch.advantage[i] * (policy.log_prob(s, a) - before.log_prob(s, a));
    }
    CHECK(gain > 0.0);
  }

  TEST_CASE("policy search respects its budget and is reproducible") {
    const auto spec = pointmass_spec(50);
    SearchConfig cfg;
    cfg.ppo.batch_steps = 1000;
    cfg.network = {{8}, {8}};
    const SuccessCriterion never = [](const GaussianPolicy&, const ValueFunction&) { return EvalOutcome{}; };
    const auto a = policy_search(spec, std::nullopt, 3000, never, cfg, 17);
    const auto b = policy_search(spec, std::nullopt, 3000, never, cfg, 17);
    CHECK(a.report.sample_count >= 3000);
    CHECK(a.report.sample_count < 3000 + 1000 + 50);
    CHECK_FALSE(a.report.succeeded);
    CHECK(a.policy == b.policy);
    CHECK(a.value == b.value);
  }

  TEST_CASE("policy search stops after consecutive successes") {
    const auto spec = pointmass_spec(50);
    SearchConfig cfg;
    cfg.ppo.batch_steps = 500;
    cfg.network = {{8}, {8}};
    cfg.confirm_iterations = 3;
    const SuccessCriterion always = [](const GaussianPolicy&, const ValueFunction&) {
      return EvalOutcome{1.0, 0.0, true};
    };
    const auto r = policy_search(spec, std::nullopt, 100000, always, cfg, 3);
    CHECK(r.report.succeeded);
    CHECK(r.report.iterations == 3);
  }

  TEST_CASE("subtask validation") {
    auto spec = pointmass_spec(10);
    spec.gamma = 1.5;
    CHECK_THROWS_AS(spec.validate(), Error);
    spec = pointmass_spec(10);
    spec.objective = RelayObjective{nullptr, 0.0, 30.0};
    CHECK_THROWS_AS(spec.validate(), Error);
  }
}
