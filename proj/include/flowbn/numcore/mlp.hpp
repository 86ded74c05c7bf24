#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "flowbn/numcore/matrix.hpp"
#include "flowbn/numcore/rng.hpp"

namespace flowbn::num {

// Activations recorded by a batched forward pass; acts[0] is the input and
// acts[l + 1] the output of layer l (after its activation).
struct MlpTape {
  std::vector<Matrix> acts;
};

struct MlpGradient {
  std::vector<double> parameters;  // same layout as Mlp::parameters()
  std::vector<double> input;
};

// Fully connected network with tanh hidden layers and an identity output.
// All weights and biases live in one flat buffer; layer l stores its weight
// matrix (in x out, row-major) followed by its bias.
class Mlp {
 public:
  Mlp() = default;
  // Zero-valued parameters. Needs at least two widths (input and output).
  explicit Mlp(std::vector<std::size_t> widths);

  // Glorot-uniform hidden layers; the final layer is zeroed when
  // `zero_final_layer` so that the network outputs exactly 0.
  static Mlp initialized(std::vector<std::size_t> widths, Rng& rng, bool zero_final_layer = true);

  const std::vector<std::size_t>& widths() const { return widths_; }
  std::size_t input_width() const { return widths_.front(); }
  std::size_t output_width() const { return widths_.back(); }
  std::size_t layer_count() const { return widths_.size() - 1; }
  std::size_t parameter_count() const { return params_.size(); }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  DenseView weights(std::size_t layer) const;
  DenseMutView weights(std::size_t layer);
  std::span<const double> bias(std::size_t layer) const;
  std::span<double> bias(std::size_t layer);
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + widths_[layer] * widths_[layer + 1];
  }

  // Batched forward over the rows of `x`. Fills `tape` when given.
  Matrix forward_batch(const Matrix& x, MlpTape* tape = nullptr) const;

  // Accumulates parameter gradients into `param_grad` (same layout as
  // parameters()) and, when `input_grad` is non-null, writes dL/dx into it.
  void backward_batch(const MlpTape& tape, const Matrix& output_grad, std::span<double> param_grad,
                      Matrix* input_grad) const;

  friend bool operator==(const Mlp&, const Mlp&) = default;

 private:
  std::vector<std::size_t> widths_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

std::vector<double> mlp_forward(const Mlp& net, std::span<const double> input);
MlpGradient mlp_backward(const Mlp& net, std::span<const double> input,
                         std::span<const double> output_gradient);

}  // namespace flowbn::num
