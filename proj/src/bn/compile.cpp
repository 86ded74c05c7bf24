#include "flowbn/bn/compile.hpp"

#include <string>
#include <vector>

#include "flowbn/error.hpp"

namespace flowbn::bn {

namespace {

std::string num(std::size_t i) { return std::to_string(i + 1); }

}  // namespace

Bn bn_from_flow(const flows::FlowSpec& spec, bool include_latents) {
  spec.validate();
  const std::size_t d = spec.dim;
  const std::size_t K = spec.steps.size();
  if (!include_latents && K != 1) {
    throw InputError("bn_from_flow: the observed-only projection is defined for single-step flows; " +
                     std::to_string(K) + " steps need --latents");
  }

  Bn bn;
  // layer_ids[s][c]: node index of component c in data-side layer s
  // (s = 0 is x, s = K is z).
  std::vector<std::vector<std::size_t>> layer_ids(K + 1, std::vector<std::size_t>(d));
  if (include_latents) {
    for (std::size_t s = K + 1; s-- > 0;) {
      for (std::size_t c = 0; c < d; ++c) {
        Node n;
        if (s == K) {
          n = {"z" + num(c), "z" + num(c), NodeKind::Latent, std::nullopt, false};
        } else if (s == 0) {
          n = {"x" + num(c), "x" + num(c), NodeKind::Observed, K, true};
        } else {
          const std::string j = std::to_string(K - s);
          n = {"u" + j + "_" + num(c), "u^" + j + "_" + num(c), NodeKind::Intermediate, K - s, true};
        }
        layer_ids[s][c] = bn.add_node(std::move(n));
      }
    }
  } else {
    for (std::size_t c = 0; c < d; ++c) {
      layer_ids[0][c] = bn.add_node({"x" + num(c), "x" + num(c), NodeKind::Observed, std::nullopt, false});
    }
  }

  // Edges are added from the latent side down so the listing reads in
  // generative order.
  std::vector<std::vector<std::size_t>> positioned(K);
  std::vector<std::size_t> current(d);
  for (std::size_t c = 0; c < d; ++c) current[c] = c;
  for (std::size_t s = 0; s < K; ++s) {
    const auto order = flows::permutation_order(spec.steps[s].permutation, d);
    positioned[s].resize(d);
    for (std::size_t p = 0; p < d; ++p) positioned[s][p] = current[order[p]];
    current = positioned[s];
  }
  for (std::size_t s = K; s-- > 0;) {
    if (include_latents) {
      for (std::size_t c = 0; c < d; ++c) bn.add_edge(layer_ids[s + 1][c], layer_ids[s][c], true);
    }
    for (std::size_t p = 0; p < d; ++p) {
      for (std::size_t q : flows::conditioning_positions(spec.steps[s].conditioner, p)) {
        bn.add_edge(layer_ids[s][positioned[s][q]], layer_ids[s][positioned[s][p]]);
      }
    }
  }
  return bn;
}

}  // namespace flowbn::bn
