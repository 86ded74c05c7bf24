#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "flowbn/flows/spec.hpp"
#include "flowbn/numcore/adam.hpp"
#include "flowbn/numcore/mlp.hpp"
#include "flowbn/numcore/rng.hpp"

namespace flowbn::flows {

struct ModelOptions {
  std::vector<std::size_t> hidden = {64, 64};
  friend bool operator==(const ModelOptions&, const ModelOptions&) = default;
};

// Where position `pos` of a step gets its normalizer parameters from.
struct Slot {
  bool constant = true;
  std::size_t index = 0;  // constant row or network index
};

// Structure of one step derived from its spec.
struct StepLayout {
  std::vector<std::size_t> order;                    // order[i] = input component at position i
  std::vector<std::size_t> inverse_order;            // inverse_order[c] = position of component c
  std::vector<std::vector<std::size_t>> conditioning;  // per position
  std::vector<Slot> slots;                           // per position
  std::size_t width = 0;                             // normalizer parameters per position
  std::size_t constant_rows = 0;
};

struct StepParams {
  std::vector<double> constants;  // constant_rows x width, row-major
  std::vector<num::Mlp> nets;     // one per conditioned position, in position order
  friend bool operator==(const StepParams&, const StepParams&) = default;
};

// A flow architecture together with all of its learnable parameters.
// Freshly constructed models are exactly the identity map: constants are
// zero and every conditioner network has a zeroed output layer.
class FlowModel {
 public:
  FlowModel(FlowSpec spec, num::Rng& rng, ModelOptions options = {});

  const FlowSpec& spec() const { return spec_; }
  const ModelOptions& options() const { return options_; }
  std::size_t dim() const { return spec_.dim; }
  std::size_t step_count() const { return spec_.steps.size(); }

  const StepLayout& layout(std::size_t step) const { return layouts_[step]; }
  const StepParams& params(std::size_t step) const { return params_[step]; }
  StepParams& params(std::size_t step) { return params_[step]; }

  // Flat parameter view. Blocks are ordered step by step: the constants
  // block first (when present), then each network.
  std::vector<num::ParamBlock> parameter_blocks() const;
  std::size_t parameter_count() const;
  std::vector<double> flat_parameters() const;
  void set_flat_parameters(std::span<const double> values);

  friend bool operator==(const FlowModel& a, const FlowModel& b) {
    return a.spec_ == b.spec_ && a.options_ == b.options_ && a.params_ == b.params_;
  }

 private:
  FlowSpec spec_;
  ModelOptions options_;
  std::vector<StepLayout> layouts_;
  std::vector<StepParams> params_;
};

StepLayout make_layout(const StepSpec& step, std::size_t dim);

// Adds N(0, scale^2) noise to every parameter. Used to build random,
// non-identity models for tests and experiments.
void perturb_parameters(FlowModel& model, num::Rng& rng, double scale);

}  // namespace flowbn::flows
