#include "flowbn/numcore/mlp.hpp"

#include <cmath>
#include <string>

#include "flowbn/error.hpp"
#include "flowbn/numcore/kernels.hpp"

namespace flowbn::num {

namespace k = kernels::parallel;

Mlp::Mlp(std::vector<std::size_t> widths) : widths_(std::move(widths)) {
  if (widths_.size() < 2) throw InputError("Mlp: need at least input and output widths");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    if (widths_[l + 1] == 0) throw InputError("Mlp: layer width must be positive");
    offsets_.push_back(total);
    total += widths_[l] * widths_[l + 1] + widths_[l + 1];
  }
  params_.assign(total, 0.0);
}

Mlp Mlp::initialized(std::vector<std::size_t> widths, Rng& rng, bool zero_final_layer) {
  Mlp net(std::move(widths));
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    if (zero_final_layer && l + 1 == net.layer_count()) break;
    const double fan_in = static_cast<double>(net.widths_[l]);
    const double fan_out = static_cast<double>(net.widths_[l + 1]);
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    auto w = net.weights(l);
    for (std::size_t i = 0; i < w.rows * w.cols; ++i) w.data[i] = rng.uniform(-limit, limit);
  }
  return net;
}

DenseView Mlp::weights(std::size_t layer) const {
  return {params_.data() + offsets_[layer], widths_[layer], widths_[layer + 1]};
}

DenseMutView Mlp::weights(std::size_t layer) {
  return {params_.data() + offsets_[layer], widths_[layer], widths_[layer + 1]};
}

std::span<const double> Mlp::bias(std::size_t layer) const {
  return {params_.data() + bias_offset(layer), widths_[layer + 1]};
}

std::span<double> Mlp::bias(std::size_t layer) {
  return {params_.data() + bias_offset(layer), widths_[layer + 1]};
}

Matrix Mlp::forward_batch(const Matrix& x, MlpTape* tape) const {
  if (x.cols() != input_width()) {
    throw InputError("Mlp::forward: input width " + std::to_string(x.cols()) + " != expected " +
                     std::to_string(input_width()));
  }
  MlpTape local;
  MlpTape& t = tape ? *tape : local;
  t.acts.resize(layer_count() + 1);
  t.acts[0] = x;
  for (std::size_t l = 0; l < layer_count(); ++l) {
    Matrix& next = t.acts[l + 1];
    if (next.rows() != x.rows() || next.cols() != widths_[l + 1]) next = Matrix(x.rows(), widths_[l + 1]);
    k::affine_rows(t.acts[l].view(), weights(l), bias(l), next.mut_view());
    if (l + 1 < layer_count()) k::tanh_inplace(next.mut_view());
  }
  return tape ? t.acts.back() : std::move(t.acts.back());
}

void Mlp::backward_batch(const MlpTape& tape, const Matrix& output_grad, std::span<double> param_grad,
                         Matrix* input_grad) const {
  if (tape.acts.size() != layer_count() + 1) throw InputError("Mlp::backward: tape does not match network");
  const std::size_t n = tape.acts[0].rows();
  if (output_grad.rows() != n || output_grad.cols() != output_width()) {
    throw InputError("Mlp::backward: output gradient shape mismatch");
  }
  if (param_grad.size() != params_.size()) throw InputError("Mlp::backward: parameter gradient size mismatch");

  Matrix upstream = output_grad;
  for (std::size_t l = layer_count(); l-- > 0;) {
    Matrix local;
    if (l + 1 < layer_count()) {
      local = Matrix(n, widths_[l + 1]);
      k::tanh_backward(tape.acts[l + 1].view(), upstream.view(), local.mut_view());
    } else {
      local = std::move(upstream);
    }
    DenseMutView dw{param_grad.data() + offsets_[l], widths_[l], widths_[l + 1]};
    k::weight_grad(tape.acts[l].view(), local.view(), dw, param_grad.subspan(bias_offset(l), widths_[l + 1]));
    if (l > 0 || input_grad != nullptr) {
      Matrix down(n, widths_[l]);
      k::input_grad(local.view(), weights(l), down.mut_view());
      if (l == 0) {
        *input_grad = std::move(down);
      } else {
        upstream = std::move(down);
      }
    }
  }
}

std::vector<double> mlp_forward(const Mlp& net, std::span<const double> input) {
  const Matrix out = net.forward_batch(Matrix::from_row(input));
  return {out.values().begin(), out.values().end()};
}

MlpGradient mlp_backward(const Mlp& net, std::span<const double> input,
                         std::span<const double> output_gradient) {
  if (output_gradient.size() != net.output_width()) {
    throw InputError("mlp_backward: output gradient length mismatch");
  }
  MlpTape tape;
  net.forward_batch(Matrix::from_row(input), &tape);
  MlpGradient grad;
  grad.parameters.assign(net.parameter_count(), 0.0);
  Matrix dx;
  net.backward_batch(tape, Matrix::from_row(output_gradient), grad.parameters, &dx);
  grad.input.assign(dx.values().begin(), dx.values().end());
  return grad;
}

}  // namespace flowbn::num
