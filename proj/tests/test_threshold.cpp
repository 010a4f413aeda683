#include <cmath>
#include <limits>

#include "doctest.h"
#include "oracles.hpp"
#include "relaynet/error.hpp"
#include "relaynet/threshold.hpp"

using namespace relaynet;

namespace {

// V(s) = s[0] on a 1-d state.
ValueFunction identity_value() {
  ValueFunction vf;
  vf.features = FeatureMap::identity(1);
  vf.net = MlpParams::zeros({1, 1});
  vf.net.weights[0][0] = 1.0;
  return vf;
}

CalibrationSet calibration(const std::vector<double>& values, const std::vector<double>& returns,
                           const std::vector<bool>& failed) {
  CalibrationSet c;
  for (double v : values) c.states.push_back({v});
  c.returns = returns;
  c.failed = failed;
  return c;
}

}  // namespace

TEST_SUITE("threshold") {
  TEST_CASE("stump fit matches an exhaustive scan on random datasets") {
    const auto check = oracles::stump_bruteforce_check(200, 99);
    CHECK(check.datasets == 200);
    CHECK(check.mismatches == 0);
  }

  TEST_CASE("separable data gets a zero-error midpoint cut") {
    const std::vector<LabeledValue> d{{1.0, 0}, {2.0, 0}, {4.0, 1}, {5.0, 1}};
    const auto fit = stump_fit_detailed(d);
    CHECK(fit.errors == 0);
    CHECK(fit.threshold == doctest::Approx(3.0));
    CHECK_FALSE(fit.inverted);
  }

  TEST_CASE("ties between equally good cuts go to the widest gap") {
    // Cuts at 1|2 and at 10|14 both make one error.
    const std::vector<LabeledValue> d{{1.0, 0}, {2.0, 1}, {10.0, 0}, {14.0, 1}, {15.0, 1}};
    const auto fit = stump_fit_detailed(d);
    CHECK(fit.errors == count_errors(d, fit.threshold));
    CHECK(fit.errors == 1);
    CHECK(fit.threshold == doctest::Approx(12.0));
  }

  TEST_CASE("backwards value functions are flagged") {
    const std::vector<LabeledValue> d{{1.0, 1}, {2.0, 1}, {3.0, 0}, {4.0, 0}};
    const auto fit = stump_fit_detailed(d);
    CHECK(fit.inverted);
    CHECK(fit.errors == 2);
  }

  TEST_CASE("single-class data is degenerate") {
    const std::vector<LabeledValue> d{{1.0, 1}, {2.0, 1}};
    CHECK_THROWS_AS(stump_fit(d), Error);
  }

  TEST_CASE("confusion counts") {
    ConfusionCounts c;
    c.add(true, true);
    c.add(true, false);
    c.add(false, true);
    c.add(false, false);
    c.add(false, false);
    CHECK(c == ConfusionCounts{1, 1, 1, 2});
    CHECK(c.total() == 5);
    CHECK(c.accuracy() == doctest::Approx(0.6));
  }

  TEST_CASE("labels compare returns against the mean of surviving rollouts") {
    const auto vf = identity_value();
    // Failed rollouts are excluded from the mean: r_bar = (1 + 3) / 2 = 2.
    const auto calib = calibration({0.0, 1.0, 2.0, 3.0}, {1.0, -100.0, 3.0, 2.0}, {false, true, false, true});
    const auto r = fit_threshold(vf, calib, 0.0);
    CHECK(r.r_bar == doctest::Approx(2.0));
    CHECK(r.labels == std::vector<int>{0, 0, 1, 0});
    CHECK(r.m == 4);
  }

  TEST_CASE("threshold separates good from bad start states") {
    const auto vf = identity_value();
    std::vector<double> values, returns;
    std::vector<bool> failed;
    for (int i = 0; i < 100; ++i) {
      const double v = i / 10.0;
      values.push_back(v);
      returns.push_back(v > 6.0 ? 10.0 : 0.0);
      failed.push_back(false);
    }
    // Interleave so the holdout tail covers both classes.
    CalibrationSet c;
    for (int i = 0; i < 100; ++i) {
      const int j = (i * 37) % 100;
      c.states.push_back({values[j]});
      c.returns.push_back(returns[j]);
      c.failed.push_back(failed[j]);
    }
    const auto r = fit_threshold(vf, c, 0.25);
    CHECK(r.fit_errors == 0);
    CHECK(r.v_bar > 5.9);
    CHECK(r.v_bar < 6.2);
    CHECK(r.holdout.total() == 25);
    CHECK(r.holdout.accuracy() == 1.0);
  }

  TEST_CASE("all rollouts failing is an error") {
    const auto vf = identity_value();
    CHECK_THROWS_AS(fit_threshold(vf, calibration({0.0, 1.0}, {1.0, 2.0}, {true, true}), 0.0), Error);
  }

  TEST_CASE("equal returns fall back to a threshold above every value") {
    const auto vf = identity_value();
    const auto r = fit_threshold(vf, calibration({0.0, 1.0, 2.0}, {5.0, 5.0, 5.0}, {false, false, false}), 0.0);
    CHECK(r.degenerate);
    CHECK(r.v_bar > 2.0);
    CHECK_FALSE(r.warning.empty());
  }
}
