#include "flowbn/flows/model.hpp"

#include <algorithm>

#include "flowbn/error.hpp"

namespace flowbn::flows {

StepLayout make_layout(const StepSpec& step, std::size_t dim) {
  StepLayout layout;
  layout.order = permutation_order(step.permutation, dim);
  layout.inverse_order.assign(dim, 0);
  for (std::size_t i = 0; i < dim; ++i) layout.inverse_order[layout.order[i]] = i;
  layout.width = normalizer_width(step.normalizer);
  std::size_t nets = 0;
  for (std::size_t pos = 0; pos < dim; ++pos) {
    layout.conditioning.push_back(conditioning_positions(step.conditioner, pos));
    if (layout.conditioning.back().empty()) {
      layout.slots.push_back({true, layout.constant_rows++});
    } else {
      layout.slots.push_back({false, nets++});
    }
  }
  return layout;
}

FlowModel::FlowModel(FlowSpec spec, num::Rng& rng, ModelOptions options)
    : spec_(std::move(spec)), options_(std::move(options)) {
  spec_.validate();
  for (const auto& step : spec_.steps) {
    StepLayout layout = make_layout(step, spec_.dim);
    StepParams params;
    params.constants.assign(layout.constant_rows * layout.width, 0.0);
    for (std::size_t pos = 0; pos < spec_.dim; ++pos) {
      if (layout.slots[pos].constant) continue;
      std::vector<std::size_t> widths{layout.conditioning[pos].size()};
      widths.insert(widths.end(), options_.hidden.begin(), options_.hidden.end());
      widths.push_back(layout.width);
      params.nets.push_back(num::Mlp::initialized(widths, rng, true));
    }
    layouts_.push_back(std::move(layout));
    params_.push_back(std::move(params));
  }
}

std::vector<num::ParamBlock> FlowModel::parameter_blocks() const {
  std::vector<num::ParamBlock> blocks;
  std::size_t offset = 0;
  for (std::size_t s = 0; s < params_.size(); ++s) {
    const auto& p = params_[s];
    const std::string prefix = "step" + std::to_string(s + 1);
    if (!p.constants.empty()) {
      blocks.push_back({prefix + ".constants", offset, p.constants.size()});
      offset += p.constants.size();
    }
    std::size_t net_index = 0;
    for (std::size_t pos = 0; pos < spec_.dim; ++pos) {
      if (layouts_[s].slots[pos].constant) continue;
      const auto& net = p.nets[net_index++];
      blocks.push_back({prefix + ".net" + std::to_string(pos + 1), offset, net.parameter_count()});
      offset += net.parameter_count();
    }
  }
  return blocks;
}

std::size_t FlowModel::parameter_count() const {
  std::size_t total = 0;
  for (const auto& p : params_) {
    total += p.constants.size();
    for (const auto& n : p.nets) total += n.parameter_count();
  }
  return total;
}

std::vector<double> FlowModel::flat_parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& p : params_) {
    out.insert(out.end(), p.constants.begin(), p.constants.end());
    for (const auto& n : p.nets) out.insert(out.end(), n.parameters().begin(), n.parameters().end());
  }
  return out;
}

void FlowModel::set_flat_parameters(std::span<const double> values) {
  if (values.size() != parameter_count()) {
    throw InputError("FlowModel: expected " + std::to_string(parameter_count()) + " parameters, got " +
                     std::to_string(values.size()));
  }
  std::size_t offset = 0;
  for (auto& p : params_) {
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(offset), p.constants.size(), p.constants.begin());
    offset += p.constants.size();
    for (auto& n : p.nets) {
      auto dst = n.parameters();
      std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(offset), dst.size(), dst.begin());
      offset += dst.size();
    }
  }
}

void perturb_parameters(FlowModel& model, num::Rng& rng, double scale) {
  auto values = model.flat_parameters();
  for (auto& v : values) v += scale * rng.normal();
  model.set_flat_parameters(values);
}

}  // namespace flowbn::flows
