#include "flowbn/bn/io.hpp"

#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "flowbn/error.hpp"

namespace flowbn::bn {

namespace {

using nlohmann::json;

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

void only_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw InputError("BN JSON: " + where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw InputError("BN JSON: unknown field '" + key + "' in " + where);
  }
}

template <typename T>
T field(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw InputError(std::string("BN JSON: missing '") + key + "' in " + where);
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw InputError(std::string("BN JSON: field '") + key + "' in " + where + " has the wrong type");
  }
}

}  // namespace

std::string export_dot(const Bn& bn) {
  std::ostringstream out;
  out << "digraph bn {\n  rankdir=LR;\n  node [shape=circle];\n";
  for (const Node& n : bn.nodes()) {
    out << "  " << quoted(n.id) << " [label=" << quoted(n.label);
    if (n.deterministic) out << ", peripheries=2";
    out << "];\n";
  }
  // Latent nodes without a step sit in rank 0 when any node has a step.
  std::map<std::size_t, std::vector<std::string>> ranks;
  bool any_step = false;
  for (const Node& n : bn.nodes()) any_step = any_step || n.step.has_value();
  if (any_step) {
    for (const Node& n : bn.nodes()) ranks[n.step.value_or(0)].push_back(n.id);
    for (const auto& [rank, ids] : ranks) {
      out << "  { rank=same;";
      for (const auto& id : ids) out << " " << quoted(id) << ";";
      out << " }\n";
    }
  }
  for (const Edge& e : bn.edges()) {
    out << "  " << quoted(bn.node(e.from).id) << " -> " << quoted(bn.node(e.to).id);
    if (e.bijective) out << " [dir=none]";
    out << ";\n";
  }
  out << "}\n";
  return out.str();
}

std::string to_json(const Bn& bn) {
  json nodes = json::array();
  for (const Node& n : bn.nodes()) {
    json j = {{"id", n.id}, {"label", n.label}, {"kind", to_string(n.kind)}, {"deterministic", n.deterministic}};
    j["step"] = n.step ? json(*n.step) : json(nullptr);
    nodes.push_back(std::move(j));
  }
  json edges = json::array();
  for (const Edge& e : bn.edges()) {
    edges.push_back({{"from", bn.node(e.from).id}, {"to", bn.node(e.to).id}, {"bijective", e.bijective}});
  }
  json doc = {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
  return doc.dump(2) + "\n";
}

Bn bn_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("BN JSON: ") + e.what());
  }
  only_keys(doc, {"nodes", "edges"}, "document");
  if (!doc.contains("nodes") || !doc["nodes"].is_array()) throw InputError("BN JSON: 'nodes' must be an array");
  Bn bn;
  for (const json& jn : doc["nodes"]) {
    only_keys(jn, {"id", "label", "kind", "deterministic", "step"}, "node");
    Node n;
    n.id = field<std::string>(jn, "id", "node");
    const std::string where = "node '" + n.id + "'";
    n.label = jn.contains("label") ? field<std::string>(jn, "label", where) : n.id;
    n.kind = jn.contains("kind") ? parse_node_kind(field<std::string>(jn, "kind", where)) : NodeKind::Observed;
    n.deterministic = jn.contains("deterministic") ? field<bool>(jn, "deterministic", where) : false;
    if (jn.contains("step") && !jn["step"].is_null()) n.step = field<std::size_t>(jn, "step", where);
    bn.add_node(std::move(n));
  }
  if (doc.contains("edges")) {
    if (!doc["edges"].is_array()) throw InputError("BN JSON: 'edges' must be an array");
    for (const json& je : doc["edges"]) {
      only_keys(je, {"from", "to", "bijective"}, "edge");
      const bool bij = je.contains("bijective") ? field<bool>(je, "bijective", "edge") : false;
      bn.add_edge(field<std::string>(je, "from", "edge"), field<std::string>(je, "to", "edge"), bij);
    }
  }
  return bn;
}

}  // namespace flowbn::bn
