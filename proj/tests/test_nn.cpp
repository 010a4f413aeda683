#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "relaynet/adam.hpp"
#include "relaynet/error.hpp"
#include "relaynet/features.hpp"
#include "relaynet/mlp.hpp"
#include "relaynet/rng.hpp"

using namespace relaynet;

TEST_SUITE("nn-core") {
  TEST_CASE("backprop agrees with central differences on random nets") {
    const auto check = oracles::finite_difference_check(20, 7);
    CHECK(check.nets == 20);
    CHECK(check.max_relative_error < 1e-4);
  }

  TEST_CASE("zero weights give zero output") {
    const MlpParams p = MlpParams::zeros({3, 5, 2});
    const Tensor y = mlp_forward(p, Tensor::vector({1.0, -2.0, 0.5}));
    CHECK(y.size() == 2);
    CHECK(y[0] == 0.0);
    CHECK(y[1] == 0.0);
  }

  TEST_CASE("single linear layer matches the closed form") {
    MlpParams p = MlpParams::zeros({2, 1});
    p.weights[0] = Tensor({1, 2}, {2.0, -3.0});
    p.biases[0] = Tensor({1}, {0.5});
    const Tensor y = mlp_forward(p, Tensor::vector({1.5, 0.25}));
    CHECK(y[0] == doctest::Approx(2.0 * 1.5 - 3.0 * 0.25 + 0.5));
  }

  TEST_CASE("batched forward equals row-by-row forward") {
    Rng rng(3);
    MlpParams p = MlpParams::zeros({3, 4, 2});
    init_orthogonal(p, rng, 1.0, 1.0);
    Tensor batch({5, 3});
    for (auto& v : batch.data()) v = standard_normal(rng);
    const Tensor out = mlp_forward(p, batch);
    for (std::size_t r = 0; r < 5; ++r) {
      const Tensor single = mlp_forward(p, Tensor::vector(batch.row(r)));
      CHECK(out(r, 0) == single[0]);
      CHECK(out(r, 1) == single[1]);
    }
  }

  TEST_CASE("tape matches the allocating forward and backward") {
    Rng rng(11);
    MlpParams p = MlpParams::zeros({4, 6, 6, 3});
    init_orthogonal(p, rng, 1.0, 0.5);
    const Tensor x = Tensor::vector({0.1, -0.4, 0.9, 2.0});
    const Tensor g = Tensor::vector({1.0, -0.5, 0.25});
    MlpTape tape(p);
    const auto y = tape.forward(p, x.data());
    const Tensor ref = mlp_forward(p, x);
    for (std::size_t i = 0; i < 3; ++i) CHECK(y[i] == ref[i]);
    MlpParams grads = MlpParams::zeros(p.layer_sizes);
    std::vector<double> gin(4);
    tape.backward(p, g.data(), &grads, gin);
    const auto full = backprop(p, x, g);
    CHECK(grads == full.params);
    for (std::size_t i = 0; i < 4; ++i) CHECK(gin[i] == doctest::Approx(full.input[i]).epsilon(1e-12));
  }

  TEST_CASE("dimension mismatches are rejected") {
    const MlpParams p = MlpParams::zeros({3, 2});
    CHECK_THROWS_AS(mlp_forward(p, Tensor::vector({1.0, 2.0})), Error);
    MlpParams broken = p;
    broken.weights[0] = Tensor({2, 2});
    CHECK_THROWS_AS(broken.validate(), Error);
  }

  TEST_CASE("orthogonal init has orthonormal rows scaled by the gain") {
    Rng rng(5);
    MlpParams p = MlpParams::zeros({8, 4, 1});
    init_orthogonal(p, rng, 2.0, 1.0);
    const Tensor& w = p.weights[0];
    for (std::size_t a = 0; a < 4; ++a)
      for (std::size_t b = 0; b < 4; ++b) {
        double dot = 0.0;
        for (std::size_t k = 0; k < 8; ++k) dot += w(a, k) * w(b, k);
        CHECK(dot == doctest::Approx(a == b ? 4.0 : 0.0).epsilon(1e-9).scale(1.0));
      }
  }

  TEST_CASE("adam first step moves each parameter by the step size") {
    AdamState state({3}, AdamConfig{0.1, 0.9, 0.999, 1e-8});
    std::vector<double> x{1.0, -2.0, 3.0};
    std::vector<double> g{0.5, -4.0, 1e-3};
    std::vector<std::span<double>> params{x};
    std::vector<std::span<const double>> grads{g};
    state.step(params, grads);
    CHECK(x[0] == doctest::Approx(0.9).epsilon(1e-6));
    CHECK(x[1] == doctest::Approx(-1.9).epsilon(1e-6));
    CHECK(x[2] == doctest::Approx(2.9).epsilon(1e-4));
    CHECK(state.steps() == 1);
  }

  TEST_CASE("adam rejects non-finite gradients without touching parameters") {
    AdamState state({2}, AdamConfig{});
    std::vector<double> x{1.0, 2.0};
    std::vector<double> g{0.1, std::nan("")};
    std::vector<std::span<double>> params{x};
    std::vector<std::span<const double>> grads{g};
    CHECK_THROWS_AS(state.step(params, grads), Error);
    CHECK(x[0] == 1.0);
    CHECK(x[1] == 2.0);
    CHECK(state.steps() == 0);
  }

  TEST_CASE("adam minimizes a quadratic") {
    AdamState state({2}, AdamConfig{0.05, 0.9, 0.999, 1e-8});
    std::vector<double> x{3.0, -2.0};
    for (int i = 0; i < 2000; ++i) {
      std::vector<double> g{2.0 * (x[0] - 1.0), 2.0 * (x[1] + 0.5)};
      std::vector<std::span<double>> params{x};
      std::vector<std::span<const double>> grads{g};
      state.step(params, grads);
    }
    CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(x[1] == doctest::Approx(-0.5).epsilon(1e-3));
  }

  TEST_CASE("named seed streams are stable and distinct") {
    CHECK(derive_seed(1, "env") == derive_seed(1, "env"));
    CHECK(derive_seed(1, "env") != derive_seed(1, "init"));
    CHECK(derive_seed(1, "env") != derive_seed(2, "env"));
    Rng a = make_rng(9, "x"), b = make_rng(9, "x");
    for (int i = 0; i < 10; ++i) CHECK(a() == b());
  }

  TEST_CASE("angle features are continuous across the wrap") {
    const FeatureMap f({{FeatureMap::Kind::Angle, 1.0}, {FeatureMap::Kind::Scaled, 0.5}});
    CHECK(f.feature_size() == 3);
    const auto a = f.apply(std::vector<double>{M_PI - 1e-9, 2.0});
    const auto b = f.apply(std::vector<double>{-M_PI + 1e-9, 2.0});
    for (std::size_t i = 0; i < 3; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-8));
    CHECK(a[2] == doctest::Approx(1.0));
  }

  TEST_CASE("feature pullback matches finite differences") {
    const FeatureMap f({{FeatureMap::Kind::Angle, 1.0}, {FeatureMap::Kind::Scaled, 0.3}});
    const std::vector<double> s{0.7, -1.2};
    const std::vector<double> gf{0.4, -1.1, 2.0};
    std::vector<double> gs(2);
    f.pullback(s, gf, gs);
    for (std::size_t d = 0; d < 2; ++d) {
      auto up = s, down = s;
      up[d] += 1e-6;
      down[d] -= 1e-6;
      const auto fu = f.apply(up), fd = f.apply(down);
      double num = 0.0;
      for (std::size_t i = 0; i < 3; ++i) num += gf[i] * (fu[i] - fd[i]) / 2e-6;
      CHECK(gs[d] == doctest::Approx(num).epsilon(1e-6));
    }
  }
}
