#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace flowbn::num {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Named contiguous range inside a flat parameter vector. Used to report
// which block produced a non-finite gradient.
struct ParamBlock {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
};

class AdamState {
 public:
  AdamState() = default;
  AdamState(std::size_t parameter_count, AdamConfig config);

  const AdamConfig& config() const { return config_; }
  std::size_t step_count() const { return steps_; }
  std::span<const double> first_moment() const { return m_; }
  std::span<const double> second_moment() const { return v_; }

  // One bias-corrected Adam update of `params` in place. Throws
  // DivergenceError naming the offending block on a non-finite gradient;
  // in that case nothing is modified.
  void step(std::span<double> params, std::span<const double> grads, std::span<const ParamBlock> blocks = {});

 private:
  AdamConfig config_;
  std::size_t steps_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

inline void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
                      std::span<const ParamBlock> blocks = {}) {
  state.step(params, grads, blocks);
}

}  // namespace flowbn::num
