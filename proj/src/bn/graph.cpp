#include "flowbn/bn/graph.hpp"

#include <algorithm>

#include "flowbn/error.hpp"

namespace flowbn::bn {

const char* to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Latent:
      return "latent";
    case NodeKind::Intermediate:
      return "intermediate";
    case NodeKind::Observed:
      return "observed";
  }
  return "observed";
}

NodeKind parse_node_kind(const std::string& text) {
  if (text == "latent") return NodeKind::Latent;
  if (text == "intermediate") return NodeKind::Intermediate;
  if (text == "observed") return NodeKind::Observed;
  throw InputError("unknown node kind '" + text + "'");
}

std::size_t Bn::add_node(Node node) {
  if (node.id.empty()) throw InputError("Bn: node id must be non-empty");
  if (index_.count(node.id)) throw InputError("Bn: duplicate node id '" + node.id + "'");
  const std::size_t i = nodes_.size();
  index_.emplace(node.id, i);
  nodes_.push_back(std::move(node));
  parents_.emplace_back();
  children_.emplace_back();
  return i;
}

void Bn::add_edge(std::size_t from, std::size_t to, bool bijective) {
  if (from >= size() || to >= size()) throw InputError("Bn: edge endpoint out of range");
  const std::string desc = nodes_[from].id + " -> " + nodes_[to].id;
  if (from == to) throw InputError("Bn: self loop " + desc);
  if (has_edge(from, to)) throw InputError("Bn: duplicate edge " + desc);
  if (reaches(to, from)) throw InputError("Bn: edge " + desc + " would create a cycle");
  if (bijective) {
    for (const Edge& e : edges_) {
      if (e.bijective && (e.from == from || e.to == to)) {
        throw InputError("Bn: node already has a bijective edge on " + desc);
      }
    }
  }
  edges_.push_back({from, to, bijective});
  parents_[to].push_back(from);
  children_[from].push_back(to);
}

void Bn::add_edge(const std::string& from, const std::string& to, bool bijective) {
  const auto a = find(from);
  const auto b = find(to);
  if (!a) throw InputError("Bn: unknown node '" + from + "'");
  if (!b) throw InputError("Bn: unknown node '" + to + "'");
  add_edge(*a, *b, bijective);
}

bool Bn::has_edge(std::size_t from, std::size_t to) const {
  const auto& c = children_[from];
  return std::find(c.begin(), c.end(), to) != c.end();
}

std::size_t Bn::index_of(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw QueryError("unknown node '" + id + "'");
  return it->second;
}

std::optional<std::size_t> Bn::find(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::size_t> Bn::observed() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < size(); ++i) {
    if (nodes_[i].kind == NodeKind::Observed) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> Bn::topological_order() const {
  std::vector<std::size_t> indegree(size());
  for (std::size_t i = 0; i < size(); ++i) indegree[i] = parents_[i].size();
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < size(); ++i) {
    if (indegree[i] == 0) order.push_back(i);
  }
  for (std::size_t head = 0; head < order.size(); ++head) {
    for (std::size_t c : children_[order[head]]) {
      if (--indegree[c] == 0) order.push_back(c);
    }
  }
  return order;
}

Bn Bn::without_edge(std::size_t k) const {
  Bn out;
  for (const Node& n : nodes_) out.add_node(n);
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    if (i != k) out.add_edge(edges_[i].from, edges_[i].to, edges_[i].bijective);
  }
  return out;
}

bool Bn::reaches(std::size_t from, std::size_t to) const {
  std::vector<char> seen(size(), 0);
  std::vector<std::size_t> stack{from};
  seen[from] = 1;
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    if (v == to) return true;
    for (std::size_t c : children_[v]) {
      if (!seen[c]) {
        seen[c] = 1;
        stack.push_back(c);
      }
    }
  }
  return false;
}

Bn make_dag(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  Bn g;
  for (std::size_t i = 0; i < n; ++i) {
    g.add_node({"v" + std::to_string(i), "v" + std::to_string(i), NodeKind::Observed, std::nullopt, false});
  }
  for (const auto& [a, b] : edges) g.add_edge(a, b);
  return g;
}

namespace {

std::string join(const std::vector<std::string>& ids) {
  std::string out = "{";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ", ";
    out += ids[i];
  }
  return out + "}";
}

}  // namespace

std::string describe(const CiStatement& s) {
  return join(s.x) + " _|_ " + join(s.y) + " | " + join(s.z);
}

}  // namespace flowbn::bn
