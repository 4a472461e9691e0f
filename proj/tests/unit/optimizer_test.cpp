#include <doctest.h>

#include <cmath>

#include "maskgen/optimizer.hpp"

using namespace maskgen;

TEST_CASE("schedule ramps up then decays to zero") {
  AdamConfig c;
  c.base_lr = 1e-3;
  c.warmup_fraction = 0.1;
  c.total_steps = 100;
  CHECK(lr_schedule(c, 0) == 0.0);
  CHECK(lr_schedule(c, 5) == doctest::Approx(5e-4));
  CHECK(lr_schedule(c, 10) == doctest::Approx(1e-3));
  CHECK(lr_schedule(c, 55) == doctest::Approx(5e-4));
  CHECK(lr_schedule(c, 100) == 0.0);
  CHECK(lr_schedule(c, 250) == 0.0);

  c.warmup_fraction = 0.0;
  CHECK(lr_schedule(c, 0) == doctest::Approx(1e-3));
}

TEST_CASE("two Adam steps match the closed form") {
  ParameterStore store;
  store.add("w", Tensor::vector({0.5, -1.0}), ParamGroup::kBackbone);
  store.add("frozen", Tensor::vector({7.0}), ParamGroup::kProjection);
  store.set_trainable(ParamGroup::kProjection, false);
  OptimizerState state;
  state.config.total_steps = 10;
  state.config.warmup_fraction = 0.0;
  state.config.base_lr = 0.1;

  const Scalar g1[2] = {0.2, -3.0}, g2[2] = {-0.4, 1.0};
  store.at("w").mutable_grad() = Tensor::vector({g1[0], g1[1]});
  adam_step(store, state);
  store.at("w").mutable_grad() = Tensor::vector({g2[0], g2[1]});
  adam_step(store, state);

  const Scalar init[2] = {0.5, -1.0};
  for (int i = 0; i < 2; ++i) {
    // step 1 at lr(1) = 0.09: m_hat = g, v_hat = g^2
    Scalar w = init[i] - 0.09 * g1[i] / (std::abs(g1[i]) + 1e-8);
    const Scalar m = 0.9 * 0.1 * g1[i] + 0.1 * g2[i];
    const Scalar v = 0.999 * 0.001 * g1[i] * g1[i] + 0.001 * g2[i] * g2[i];
    const Scalar m_hat = m / (1 - 0.81), v_hat = v / (1 - 0.999 * 0.999);
    w -= 0.08 * m_hat / (std::sqrt(v_hat) + 1e-8);
    CHECK(store.at("w").value()[i] == doctest::Approx(w).epsilon(1e-12));
  }
  CHECK(store.at("frozen").value()[0] == 7.0);
  CHECK(state.step == 2);
}

TEST_CASE("clipping rescales to the global norm") {
  ParameterStore store;
  store.add("a", Tensor::vector({0}), ParamGroup::kBackbone);
  store.add("b", Tensor::vector({0}), ParamGroup::kBackbone);
  store.at("a").mutable_grad() = Tensor::vector({3});
  store.at("b").mutable_grad() = Tensor::vector({4});
  CHECK(clip_grad_norm(store, 1.0) == doctest::Approx(5.0));
  CHECK(store.at("a").grad()[0] == doctest::Approx(0.6));
  CHECK(store.at("b").grad()[0] == doctest::Approx(0.8));
  CHECK(clip_grad_norm(store, 10.0) == doctest::Approx(1.0));
  CHECK(store.at("a").grad()[0] == doctest::Approx(0.6));
}
