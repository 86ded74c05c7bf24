#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace flowbn::bn {

enum class NodeKind { Latent, Intermediate, Observed };

const char* to_string(NodeKind kind);
NodeKind parse_node_kind(const std::string& text);

struct Node {
  std::string id;
  std::string label;
  NodeKind kind = NodeKind::Observed;
  std::optional<std::size_t> step;
  bool deterministic = false;
  friend bool operator==(const Node&, const Node&) = default;
};

// Bijective edges are stored in the generative direction (latent side to
// data side) and only differ from plain edges in rendering.
struct Edge {
  std::size_t from = 0;
  std::size_t to = 0;
  bool bijective = false;
  friend bool operator==(const Edge&, const Edge&) = default;
};

// Directed acyclic graph over named nodes. Insertion order of nodes and
// edges is preserved and drives every exported format.
class Bn {
 public:
  std::size_t add_node(Node node);
  // Throws InputError on unknown ids, self loops, duplicates, cycles, or a
  // second bijective edge into or out of a node.
  void add_edge(std::size_t from, std::size_t to, bool bijective = false);
  void add_edge(const std::string& from, const std::string& to, bool bijective = false);

  std::size_t size() const { return nodes_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(std::size_t i) const { return nodes_[i]; }
  const std::vector<Edge>& edges() const { return edges_; }

  const std::vector<std::size_t>& parents(std::size_t i) const { return parents_[i]; }
  const std::vector<std::size_t>& children(std::size_t i) const { return children_[i]; }
  bool has_edge(std::size_t from, std::size_t to) const;

  // Throws QueryError for an unknown id.
  std::size_t index_of(const std::string& id) const;
  std::optional<std::size_t> find(const std::string& id) const;

  std::vector<std::size_t> observed() const;
  std::vector<std::size_t> topological_order() const;

  // Copy with edge `k` removed.
  Bn without_edge(std::size_t k) const;

  friend bool operator==(const Bn& a, const Bn& b) { return a.nodes_ == b.nodes_ && a.edges_ == b.edges_; }

 private:
  bool reaches(std::size_t from, std::size_t to) const;

  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> parents_;
  std::vector<std::vector<std::size_t>> children_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Graph with nodes v0..v{n-1} (all observed) and the given edges.
Bn make_dag(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges);

// X is independent of Y given Z.
struct CiStatement {
  std::vector<std::string> x;
  std::vector<std::string> y;
  std::vector<std::string> z;
  friend bool operator==(const CiStatement&, const CiStatement&) = default;
};

std::string describe(const CiStatement& s);

}  // namespace flowbn::bn
