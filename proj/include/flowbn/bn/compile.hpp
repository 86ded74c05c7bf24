#pragma once

#include "flowbn/bn/graph.hpp"
#include "flowbn/flows/spec.hpp"

namespace flowbn::bn {

// Equivalent Bayesian network of a flow architecture.
//
// With latents, a K-step flow gives K + 1 layers of d nodes: z1..zd, then
// u{j}_i for the intermediate layers (j = 1 next to z), then x1..xd. Nodes
// carry the identity of the data component they track through the
// permutations. Each step contributes its conditioner edges among the nodes
// of its data-side layer, and every data-side node gets one bijective edge
// from its latent-side counterpart.
//
// Without latents only single-step specs are accepted; the result is the
// conditioner graph on x1..xd. Multi-step specs throw InputError.
Bn bn_from_flow(const flows::FlowSpec& spec, bool include_latents);

}  // namespace flowbn::bn
