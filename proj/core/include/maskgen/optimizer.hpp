#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "maskgen/autograd.hpp"

namespace maskgen {

struct AdamConfig {
  Scalar base_lr = 1e-3;
  Scalar warmup_fraction = 0.1;
  std::uint64_t total_steps = 1;
  Scalar beta1 = 0.9;
  Scalar beta2 = 0.999;
  Scalar epsilon = 1e-8;
};

struct OptimizerState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::map<std::string, Tensor> first_moment;
  std::map<std::string, Tensor> second_moment;
};

// Linear ramp from 0 to base_lr over warmup_fraction * total_steps steps, then
// linear decay to 0 at total_steps. Clamped to 0 beyond total_steps.
Scalar lr_schedule(const AdamConfig& config, std::uint64_t step);

// One bias-corrected Adam update on every trainable parameter, scaled by the
// schedule at the post-increment step. Frozen parameters are not touched.
void adam_step(ParameterStore& params, OptimizerState& state);

// Rescales trainable gradients so their global L2 norm is at most max_norm.
// Returns the norm before clipping.
Scalar clip_grad_norm(ParameterStore& params, Scalar max_norm);

}  // namespace maskgen
