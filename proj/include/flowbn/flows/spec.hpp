#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

namespace flowbn::flows {

// Conditioners. Positions are counted in the step's permuted order.
struct Autoregressive {
  friend bool operator==(const Autoregressive&, const Autoregressive&) = default;
};
// Positions 1..k-1 (1-based) get constant parameters; positions k..d are
// conditioned on positions 1..k-1. Requires 1 < k <= d.
struct Coupling {
  std::size_t k = 2;
  friend bool operator==(const Coupling&, const Coupling&) = default;
};
struct Constant {
  friend bool operator==(const Constant&, const Constant&) = default;
};
using ConditionerSpec = std::variant<Autoregressive, Coupling, Constant>;

struct Affine {
  friend bool operator==(const Affine&, const Affine&) = default;
};
struct MonotonePwl {
  std::size_t bins = 32;
  friend bool operator==(const MonotonePwl&, const MonotonePwl&) = default;
};
using NormalizerSpec = std::variant<Affine, MonotonePwl>;

struct IdentityPermutation {
  friend bool operator==(const IdentityPermutation&, const IdentityPermutation&) = default;
};
struct ReversePermutation {
  friend bool operator==(const ReversePermutation&, const ReversePermutation&) = default;
};
// order[i] is the 0-based input component placed at position i.
struct ExplicitPermutation {
  std::vector<std::size_t> order;
  friend bool operator==(const ExplicitPermutation&, const ExplicitPermutation&) = default;
};
using PermutationSpec = std::variant<IdentityPermutation, ReversePermutation, ExplicitPermutation>;

// One transformation step. The permutation is applied to the step input
// before the conditioner/normalizer pair.
struct StepSpec {
  ConditionerSpec conditioner = Autoregressive{};
  NormalizerSpec normalizer = Affine{};
  PermutationSpec permutation = IdentityPermutation{};
  friend bool operator==(const StepSpec&, const StepSpec&) = default;
};

// Steps are listed in the order they are applied to a data vector x on its
// way to the latent z: steps[0] acts on x, steps.back() produces z.
struct FlowSpec {
  std::size_t dim = 0;
  std::vector<StepSpec> steps;

  // Throws InputError describing the first violated constraint.
  void validate() const;
  friend bool operator==(const FlowSpec&, const FlowSpec&) = default;
};

// Default coupling split: ceil(d/2) leading components left unconditioned.
std::size_t default_coupling_split(std::size_t dim);

// `steps` steps sharing one conditioner and normalizer. The first step keeps
// the input order; every later step reverses it.
FlowSpec make_stacked_flow(std::size_t dim, std::size_t steps, ConditionerSpec conditioner,
                           NormalizerSpec normalizer = Affine{});

std::vector<std::size_t> permutation_order(const PermutationSpec& perm, std::size_t dim);

// Positions (in permuted order) whose values parameterize position `pos`.
// Empty means the position uses learnable constants.
std::vector<std::size_t> conditioning_positions(const ConditionerSpec& cond, std::size_t pos);

// Normalizer parameters per position: 2 for affine (offset, raw log-scale),
// bin count for the monotone normalizer.
std::size_t normalizer_width(const NormalizerSpec& norm);

std::string describe(const StepSpec& step);
std::string describe(const FlowSpec& spec);

}  // namespace flowbn::flows
