#include "flowbn/flows/flow.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "flowbn/error.hpp"
#include "flowbn/flows/normalizers.hpp"

namespace flowbn::flows {

namespace {

const double kHalfLogTwoPi = 0.5 * std::log(2.0 * std::numbers::pi);

struct PositionTape {
  num::Matrix params;
  num::MlpTape mlp;
};

struct StepTape {
  num::Matrix input;  // permuted step input
  std::vector<PositionTape> positions;
};

void check_width(const FlowModel& model, const num::Matrix& x, const char* what) {
  if (x.cols() != model.dim()) {
    throw InputError(std::string(what) + ": expected " + std::to_string(model.dim()) + " columns, got " +
                     std::to_string(x.cols()));
  }
}

// Normalizer parameters (n x width) for one position of one step.
num::Matrix position_params(const FlowModel& model, std::size_t step, std::size_t pos, const num::Matrix& permuted,
                            num::MlpTape* tape) {
  const auto& layout = model.layout(step);
  const auto& params = model.params(step);
  const Slot slot = layout.slots[pos];
  if (slot.constant) {
    num::Matrix out(permuted.rows(), layout.width);
    const double* row = params.constants.data() + slot.index * layout.width;
    for (std::size_t r = 0; r < out.rows(); ++r) std::copy_n(row, layout.width, out.row(r).begin());
    return out;
  }
  const num::Matrix inputs = permuted.select_columns(layout.conditioning[pos]);
  return params.nets[slot.index].forward_batch(inputs, tape);
}

class NormalizerEval {
 public:
  explicit NormalizerEval(const NormalizerSpec& spec) : affine_(std::holds_alternative<Affine>(spec)) {
    if (!affine_) {
      const std::size_t bins = std::get<MonotonePwl>(spec).bins;
      slopes_.resize(bins);
      knots_.resize(bins + 1);
      dheights_.resize(bins);
    }
  }

  // y = g(x; p), returns log dg/dx.
  double forward(double x, std::span<const double> p, double& y) {
    if (affine_) {
      const double s = bounded_log_scale(p[1]);
      y = x * std::exp(s) + p[0];
      return s;
    }
    const PwlShape shape{slopes_, knots_};
    pwl_build(p, shape);
    const PwlValue v = pwl_forward(x, shape);
    y = v.y;
    return v.log_slope;
  }

  // x = g^{-1}(y; p), returns log dg/dx at x.
  double inverse(double y, std::span<const double> p, double& x) {
    if (affine_) {
      const double s = bounded_log_scale(p[1]);
      x = (y - p[0]) * std::exp(-s);
      return s;
    }
    const PwlShape shape{slopes_, knots_};
    pwl_build(p, shape);
    x = pwl_inverse(y, shape);
    return std::log(slopes_[pwl_forward(x, shape).bin]);
  }

  // Gradients of dy * y + dlog * log g' with respect to x (returned) and p.
  double backward(double x, std::span<const double> p, double dy, double dlog, std::span<double> dp) {
    if (affine_) {
      const double s = bounded_log_scale(p[1]);
      const double scale = std::exp(s);
      dp[0] = dy;
      dp[1] = (dy * x * scale + dlog) * bounded_log_scale_grad(p[1]);
      return dy * scale;
    }
    const PwlShape shape{slopes_, knots_};
    pwl_build(p, shape);
    const PwlValue v = pwl_forward(x, shape);
    return pwl_backward(x, v, shape, dy, dlog, dp);
  }

 private:
  bool affine_;
  std::vector<double> slopes_;
  std::vector<double> knots_;
  std::vector<double> dheights_;
};

void check_finite(const num::Matrix& y, std::span<const double> logdet, std::size_t step, const char* direction) {
  bool ok = y.all_finite();
  for (double v : logdet) ok = ok && std::isfinite(v);
  if (!ok) {
    throw EvaluationError(std::string(direction) + ": non-finite value produced by step " + std::to_string(step + 1));
  }
}

StepOutput run_step(const FlowModel& model, std::size_t step, const num::Matrix& x, StepTape* tape) {
  const auto& layout = model.layout(step);
  const std::size_t n = x.rows();
  const std::size_t d = model.dim();
  num::Matrix permuted = x.select_columns(layout.order);
  StepOutput out{num::Matrix(n, d), std::vector<double>(n, 0.0)};
  NormalizerEval eval(model.spec().steps[step].normalizer);
  if (tape) tape->positions.resize(d);
  for (std::size_t pos = 0; pos < d; ++pos) {
    num::MlpTape* mlp_tape = tape ? &tape->positions[pos].mlp : nullptr;
    num::Matrix params = position_params(model, step, pos, permuted, mlp_tape);
    for (std::size_t r = 0; r < n; ++r) {
      out.logdet[r] += eval.forward(permuted(r, pos), params.row(r), out.y(r, pos));
    }
    if (tape) tape->positions[pos].params = std::move(params);
  }
  check_finite(out.y, out.logdet, step, "flow_forward");
  if (tape) tape->input = std::move(permuted);
  return out;
}

// Inverts one step; also returns the forward log-determinant at the result.
StepOutput invert_step(const FlowModel& model, std::size_t step, const num::Matrix& y) {
  const auto& layout = model.layout(step);
  const std::size_t n = y.rows();
  const std::size_t d = model.dim();
  num::Matrix permuted(n, d);
  std::vector<double> logdet(n, 0.0);
  NormalizerEval eval(model.spec().steps[step].normalizer);
  // Conditioning positions always precede the position they feed, so a
  // single pass in position order recovers every input component.
  for (std::size_t pos = 0; pos < d; ++pos) {
    const num::Matrix params = position_params(model, step, pos, permuted, nullptr);
    for (std::size_t r = 0; r < n; ++r) {
      logdet[r] += eval.inverse(y(r, pos), params.row(r), permuted(r, pos));
    }
  }
  StepOutput out{num::Matrix(n, d), std::move(logdet)};
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < d; ++i) out.y(r, layout.order[i]) = permuted(r, i);
  }
  bool ok = out.y.all_finite();
  for (double v : out.logdet) ok = ok && std::isfinite(v);
  if (!ok) throw InversionError("flow_inverse: non-finite value while inverting step " + std::to_string(step + 1));
  return out;
}

FlowOutput forward_with_tapes(const FlowModel& model, const num::Matrix& x, std::vector<StepTape>* tapes) {
  FlowOutput out{x, std::vector<double>(x.rows(), 0.0)};
  if (tapes) tapes->resize(model.step_count());
  for (std::size_t s = 0; s < model.step_count(); ++s) {
    StepOutput step = run_step(model, s, out.z, tapes ? &(*tapes)[s] : nullptr);
    for (std::size_t r = 0; r < x.rows(); ++r) out.logdet[r] += step.logdet[r];
    out.z = std::move(step.y);
  }
  return out;
}

}  // namespace

StepOutput step_forward_batch(const FlowModel& model, std::size_t step, const num::Matrix& x) {
  check_width(model, x, "step_forward");
  if (step >= model.step_count()) throw InputError("step_forward: step index out of range");
  return run_step(model, step, x, nullptr);
}

std::pair<std::vector<double>, double> step_forward(const FlowModel& model, std::size_t step,
                                                    std::span<const double> x) {
  const StepOutput out = step_forward_batch(model, step, num::Matrix::from_row(x));
  return {{out.y.values().begin(), out.y.values().end()}, out.logdet[0]};
}

num::Matrix step_inverse_batch(const FlowModel& model, std::size_t step, const num::Matrix& y) {
  check_width(model, y, "step_inverse");
  if (step >= model.step_count()) throw InputError("step_inverse: step index out of range");
  return invert_step(model, step, y).y;
}

FlowOutput flow_forward_batch(const FlowModel& model, const num::Matrix& x) {
  check_width(model, x, "flow_forward");
  if (!x.all_finite()) throw InputError("flow_forward: non-finite input");
  return forward_with_tapes(model, x, nullptr);
}

std::pair<std::vector<double>, double> flow_forward(const FlowModel& model, std::span<const double> x) {
  const FlowOutput out = flow_forward_batch(model, num::Matrix::from_row(x));
  return {{out.z.values().begin(), out.z.values().end()}, out.logdet[0]};
}

namespace {

FlowOutput inverse_with_logdet(const FlowModel& model, const num::Matrix& z) {
  FlowOutput out{z, std::vector<double>(z.rows(), 0.0)};
  for (std::size_t s = model.step_count(); s-- > 0;) {
    StepOutput step = invert_step(model, s, out.z);
    for (std::size_t r = 0; r < z.rows(); ++r) out.logdet[r] += step.logdet[r];
    out.z = std::move(step.y);
  }
  return out;
}

}  // namespace

num::Matrix flow_inverse_batch(const FlowModel& model, const num::Matrix& z) {
  check_width(model, z, "flow_inverse");
  if (!z.all_finite()) throw InputError("flow_inverse: non-finite input");
  return inverse_with_logdet(model, z).z;
}

std::vector<double> flow_inverse(const FlowModel& model, std::span<const double> z) {
  const num::Matrix x = flow_inverse_batch(model, num::Matrix::from_row(z));
  return {x.values().begin(), x.values().end()};
}

double standard_normal_log_density(std::span<const double> z) {
  double sq = 0.0;
  for (double v : z) sq += v * v;
  return -0.5 * sq - static_cast<double>(z.size()) * kHalfLogTwoPi;
}

std::vector<double> log_prob_batch(const FlowModel& model, const num::Matrix& x) {
  const FlowOutput out = flow_forward_batch(model, x);
  std::vector<double> lp(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) lp[r] = standard_normal_log_density(out.z.row(r)) + out.logdet[r];
  return lp;
}

double log_prob(const FlowModel& model, std::span<const double> x) {
  return log_prob_batch(model, num::Matrix::from_row(x))[0];
}

SampleBatch sample(const FlowModel& model, num::Rng& rng, std::size_t n) {
  if (n == 0) throw InputError("sample: n must be at least 1");
  num::Matrix z(n, model.dim());
  for (auto& v : z.values()) v = rng.normal();
  FlowOutput inv = inverse_with_logdet(model, z);
  SampleBatch out{std::move(inv.z), std::vector<double>(n)};
  for (std::size_t r = 0; r < n; ++r) out.log_prob[r] = standard_normal_log_density(z.row(r)) + inv.logdet[r];
  return out;
}

double mean_nll(const FlowModel& model, const num::Matrix& batch) {
  if (batch.rows() == 0) throw InputError("mean_nll: empty batch");
  const auto lp = log_prob_batch(model, batch);
  double total = 0.0;
  for (double v : lp) total -= v;
  return total / static_cast<double>(batch.rows());
}

NllGradient nll_gradient(const FlowModel& model, const num::Matrix& batch) {
  if (batch.rows() == 0) throw InputError("nll_gradient: empty batch");
  check_width(model, batch, "nll_gradient");
  if (!batch.all_finite()) throw InputError("nll_gradient: non-finite input");

  const std::size_t n = batch.rows();
  const std::size_t d = model.dim();
  const double inv_n = 1.0 / static_cast<double>(n);

  std::vector<StepTape> tapes;
  FlowOutput fwd;
  try {
    fwd = forward_with_tapes(model, batch, &tapes);
  } catch (const EvaluationError& e) {
    throw DivergenceError(std::string("nll_gradient: ") + e.what());
  }

  NllGradient result;
  for (std::size_t r = 0; r < n; ++r) {
    result.loss -= standard_normal_log_density(fwd.z.row(r)) + fwd.logdet[r];
  }
  result.loss *= inv_n;
  if (!std::isfinite(result.loss)) throw DivergenceError("nll_gradient: non-finite loss");

  result.gradient.assign(model.parameter_count(), 0.0);
  std::vector<std::size_t> step_offsets(model.step_count());
  {
    std::size_t offset = 0;
    for (std::size_t s = 0; s < model.step_count(); ++s) {
      step_offsets[s] = offset;
      offset += model.params(s).constants.size();
      for (const auto& net : model.params(s).nets) offset += net.parameter_count();
    }
  }

  num::Matrix upstream = fwd.z;
  for (auto& v : upstream.values()) v *= inv_n;
  const double dlog = -inv_n;

  for (std::size_t s = model.step_count(); s-- > 0;) {
    const auto& layout = model.layout(s);
    const auto& params = model.params(s);
    const StepTape& tape = tapes[s];
    NormalizerEval eval(model.spec().steps[s].normalizer);

    std::vector<std::size_t> net_offsets;
    {
      std::size_t offset = step_offsets[s] + params.constants.size();
      for (const auto& net : params.nets) {
        net_offsets.push_back(offset);
        offset += net.parameter_count();
      }
    }

    num::Matrix dinput(n, d);
    for (std::size_t pos = 0; pos < d; ++pos) {
      const PositionTape& pt = tape.positions[pos];
      num::Matrix dparams(n, layout.width);
      for (std::size_t r = 0; r < n; ++r) {
        dinput(r, pos) += eval.backward(tape.input(r, pos), pt.params.row(r), upstream(r, pos), dlog, dparams.row(r));
      }
      const Slot slot = layout.slots[pos];
      if (slot.constant) {
        double* g = result.gradient.data() + step_offsets[s] + slot.index * layout.width;
        for (std::size_t r = 0; r < n; ++r) {
          for (std::size_t j = 0; j < layout.width; ++j) g[j] += dparams(r, j);
        }
      } else {
        const auto& net = params.nets[slot.index];
        num::Matrix dcond;
        net.backward_batch(pt.mlp, dparams,
                           std::span<double>(result.gradient).subspan(net_offsets[slot.index], net.parameter_count()),
                           &dcond);
        const auto& cond = layout.conditioning[pos];
        for (std::size_t r = 0; r < n; ++r) {
          for (std::size_t j = 0; j < cond.size(); ++j) dinput(r, cond[j]) += dcond(r, j);
        }
      }
    }

    num::Matrix previous(n, d);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t i = 0; i < d; ++i) previous(r, layout.order[i]) = dinput(r, i);
    }
    upstream = std::move(previous);
  }

  for (double g : result.gradient) {
    if (!std::isfinite(g)) throw DivergenceError("nll_gradient: non-finite gradient");
  }
  return result;
}

}  // namespace flowbn::flows
