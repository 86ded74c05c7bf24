#pragma once

#include <string>

#include "flowbn/bn/graph.hpp"

namespace flowbn::bn {

// Graphviz text. Bijective edges are drawn without arrowheads, deterministic
// nodes with a double border, and nodes that carry a step index are ranked
// left to right by it. Output depends only on the graph.
std::string export_dot(const Bn& bn);

// {"nodes": [{"id", "label", "kind", "deterministic", "step"}],
//  "edges": [{"from", "to", "bijective"}]}, edges referring to node ids.
// `step` is null for nodes outside any step.
std::string to_json(const Bn& bn);
// Throws InputError on malformed text, unknown fields, or an invalid graph.
Bn bn_from_json(const std::string& text);

}  // namespace flowbn::bn
