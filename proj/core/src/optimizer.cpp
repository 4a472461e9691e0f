#include "maskgen/optimizer.hpp"

#include <cmath>

#include "maskgen/errors.hpp"

namespace maskgen {

Scalar lr_schedule(const AdamConfig& config, std::uint64_t step) {
  if (config.total_steps == 0) throw ConfigError("lr_schedule needs total_steps > 0");
  const auto total = static_cast<Scalar>(config.total_steps);
  const auto t = static_cast<Scalar>(step);
  const Scalar warmup = config.warmup_fraction * total;
  if (t >= total) return 0.0;
  if (t < warmup) return config.base_lr * t / warmup;
  return config.base_lr * (total - t) / (total - warmup);
}

void adam_step(ParameterStore& params, OptimizerState& state) {
  const AdamConfig& cfg = state.config;
  ++state.step;
  const Scalar lr = lr_schedule(cfg, state.step);
  const auto t = static_cast<Scalar>(state.step);
  const Scalar correction1 = 1.0 - std::pow(cfg.beta1, t);
  const Scalar correction2 = 1.0 - std::pow(cfg.beta2, t);

  for (auto& p : params) {
    if (!p.trainable()) continue;
    Tensor& value = p.mutable_value();
    const Tensor& grad = p.grad();
    auto [m_it, m_new] = state.first_moment.try_emplace(p.id(), value.shape());
    auto [v_it, v_new] = state.second_moment.try_emplace(p.id(), value.shape());
    Tensor& m = m_it->second;
    Tensor& v = v_it->second;
    if (m.shape() != value.shape() || v.shape() != value.shape()) {
      throw ShapeError("optimizer moments for " + p.id() + " do not match the parameter");
    }
    for (std::size_t i = 0; i < value.size(); ++i) {
      const Scalar g = grad[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const Scalar m_hat = m[i] / correction1;
      const Scalar v_hat = v[i] / correction2;
      value[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

Scalar clip_grad_norm(ParameterStore& params, Scalar max_norm) {
  Scalar sq = 0;
  for (const auto& p : params) {
    if (!p.trainable()) continue;
    for (Scalar g : p.grad().values()) sq += g * g;
  }
  const Scalar norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0) {
    const Scalar factor = max_norm / norm;
    for (auto& p : params) {
      if (!p.trainable()) continue;
      for (auto& g : p.mutable_grad().values()) g *= factor;
    }
  }
  return norm;
}

}  // namespace maskgen
