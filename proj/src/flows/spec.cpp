#include "flowbn/flows/spec.hpp"

#include <algorithm>
#include <numeric>

#include "flowbn/error.hpp"

namespace flowbn::flows {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

void FlowSpec::validate() const {
  if (dim == 0) throw InputError("FlowSpec: dim must be at least 1");
  if (steps.empty()) throw InputError("FlowSpec: at least one step is required");
  for (std::size_t s = 0; s < steps.size(); ++s) {
    const auto& step = steps[s];
    const std::string where = "FlowSpec step " + std::to_string(s + 1) + ": ";
    if (const auto* c = std::get_if<Coupling>(&step.conditioner)) {
      if (c->k <= 1 || c->k > dim) {
        throw InputError(where + "coupling split k=" + std::to_string(c->k) + " must satisfy 1 < k <= " +
                         std::to_string(dim));
      }
    }
    if (const auto* m = std::get_if<MonotonePwl>(&step.normalizer)) {
      if (m->bins < 2) throw InputError(where + "monotone normalizer needs at least 2 bins");
    }
    if (const auto* p = std::get_if<ExplicitPermutation>(&step.permutation)) {
      if (p->order.size() != dim) throw InputError(where + "explicit permutation has wrong length");
      std::vector<bool> seen(dim, false);
      for (auto i : p->order) {
        if (i >= dim || seen[i]) throw InputError(where + "explicit permutation is not a bijection");
        seen[i] = true;
      }
    }
  }
}

std::size_t default_coupling_split(std::size_t dim) { return (dim + 1) / 2 + 1; }

FlowSpec make_stacked_flow(std::size_t dim, std::size_t steps, ConditionerSpec conditioner,
                           NormalizerSpec normalizer) {
  FlowSpec spec{dim, {}};
  for (std::size_t s = 0; s < steps; ++s) {
    StepSpec step{conditioner, normalizer, IdentityPermutation{}};
    if (s > 0) step.permutation = ReversePermutation{};
    spec.steps.push_back(step);
  }
  return spec;
}

std::vector<std::size_t> permutation_order(const PermutationSpec& perm, std::size_t dim) {
  std::vector<std::size_t> order(dim);
  std::visit(overloaded{
                 [&](const IdentityPermutation&) { std::iota(order.begin(), order.end(), 0); },
                 [&](const ReversePermutation&) {
                   for (std::size_t i = 0; i < dim; ++i) order[i] = dim - 1 - i;
                 },
                 [&](const ExplicitPermutation& e) { order = e.order; },
             },
             perm);
  return order;
}

std::vector<std::size_t> conditioning_positions(const ConditionerSpec& cond, std::size_t pos) {
  std::vector<std::size_t> out;
  std::visit(overloaded{
                 [&](const Autoregressive&) {
                   for (std::size_t j = 0; j < pos; ++j) out.push_back(j);
                 },
                 [&](const Coupling& c) {
                   if (pos + 1 >= c.k) {
                     for (std::size_t j = 0; j + 1 < c.k; ++j) out.push_back(j);
                   }
                 },
                 [&](const Constant&) {},
             },
             cond);
  return out;
}

std::size_t normalizer_width(const NormalizerSpec& norm) {
  return std::visit(overloaded{
                        [](const Affine&) -> std::size_t { return 2; },
                        [](const MonotonePwl& m) -> std::size_t { return m.bins; },
                    },
                    norm);
}

std::string describe(const StepSpec& step) {
  std::string out = std::visit(overloaded{
                                   [](const Autoregressive&) -> std::string { return "autoregressive"; },
                                   [](const Coupling& c) -> std::string { return "coupling(k=" + std::to_string(c.k) + ")"; },
                                   [](const Constant&) -> std::string { return "constant"; },
                               },
                               step.conditioner);
  out += std::visit(overloaded{
                        [](const Affine&) -> std::string { return "/affine"; },
                        [](const MonotonePwl& m) -> std::string { return "/monotone_pwl(" + std::to_string(m.bins) + ")"; },
                    },
                    step.normalizer);
  out += std::visit(overloaded{
                        [](const IdentityPermutation&) -> std::string { return ""; },
                        [](const ReversePermutation&) -> std::string { return "/reverse"; },
                        [](const ExplicitPermutation&) -> std::string { return "/explicit"; },
                    },
                    step.permutation);
  return out;
}

std::string describe(const FlowSpec& spec) {
  std::string out = "d=" + std::to_string(spec.dim) + " K=" + std::to_string(spec.steps.size());
  for (const auto& s : spec.steps) out += " " + describe(s);
  return out;
}

}  // namespace flowbn::flows
