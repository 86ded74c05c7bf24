#include "flowbn/numcore/adam.hpp"

#include <cmath>

#include "flowbn/error.hpp"

namespace flowbn::num {

AdamState::AdamState(std::size_t parameter_count, AdamConfig config)
    : config_(config), m_(parameter_count, 0.0), v_(parameter_count, 0.0) {}

void AdamState::step(std::span<double> params, std::span<const double> grads, std::span<const ParamBlock> blocks) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw InputError("adam_step: parameter/gradient size does not match optimizer state");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (std::isfinite(grads[i])) continue;
    std::string where = "parameter " + std::to_string(i);
    for (const auto& b : blocks) {
      if (i >= b.offset && i < b.offset + b.size) {
        where = "block '" + b.name + "' (entry " + std::to_string(i - b.offset) + ")";
        break;
      }
    }
    throw DivergenceError("adam_step: non-finite gradient in " + where);
  }

  ++steps_;
  const auto t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g * g;
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    params[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
  }
}

}  // namespace flowbn::num
