#include "flowbn/bn/dsep.hpp"

#include <algorithm>

#include "flowbn/error.hpp"

namespace flowbn::bn {

namespace {

std::vector<char> mask(std::size_t n, const std::vector<std::size_t>& members) {
  std::vector<char> m(n, 0);
  for (std::size_t i : members) m[i] = 1;
  return m;
}

// Marks every node with a directed path into `seed` (seed included).
std::vector<char> ancestors(const Bn& bn, const std::vector<std::size_t>& seed) {
  std::vector<char> in = mask(bn.size(), seed);
  std::vector<std::size_t> stack = seed;
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    for (std::size_t p : bn.parents(v)) {
      if (!in[p]) {
        in[p] = 1;
        stack.push_back(p);
      }
    }
  }
  return in;
}

void check_indices(const Bn& bn, const IndexQuery& q) {
  if (q.x.empty() || q.y.empty()) throw QueryError("query: X and Y must be non-empty");
  std::vector<int> owner(bn.size(), 0);
  auto claim = [&](const std::vector<std::size_t>& set, int tag) {
    for (std::size_t i : set) {
      if (i >= bn.size()) throw QueryError("query: node index out of range");
      if (owner[i] == tag) continue;
      if (owner[i] != 0) throw QueryError("query: node '" + bn.node(i).id + "' appears in more than one set");
      owner[i] = tag;
    }
  };
  claim(q.x, 1);
  claim(q.y, 2);
  claim(q.z, 3);
}

}  // namespace

IndexQuery resolve(const Bn& bn, const CiStatement& q) {
  IndexQuery out;
  for (const auto& id : q.x) out.x.push_back(bn.index_of(id));
  for (const auto& id : q.y) out.y.push_back(bn.index_of(id));
  for (const auto& id : q.z) out.z.push_back(bn.index_of(id));
  check_indices(bn, out);
  return out;
}

bool d_separated(const Bn& bn, const CiStatement& q) { return d_separated(bn, resolve(bn, q)); }

bool d_separated_oracle(const Bn& bn, const CiStatement& q) { return d_separated_oracle(bn, resolve(bn, q)); }

bool d_separated(const Bn& bn, const IndexQuery& q) {
  check_indices(bn, q);
  const std::size_t n = bn.size();
  const std::vector<char> given = mask(n, q.z);
  const std::vector<char> opens = ancestors(bn, q.z);  // colliders with an observed descendant
  const std::vector<char> target = mask(n, q.y);

  // Ball state: (node, arrived from a child) or (node, arrived from a parent).
  std::vector<char> up(n, 0);
  std::vector<char> down(n, 0);
  std::vector<std::pair<std::size_t, bool>> stack;
  for (std::size_t x : q.x) stack.emplace_back(x, true);
  while (!stack.empty()) {
    const auto [v, from_child] = stack.back();
    stack.pop_back();
    auto& seen = from_child ? up : down;
    if (seen[v]) continue;
    seen[v] = 1;
    if (!given[v] && target[v]) return false;
    if (from_child) {
      if (given[v]) continue;
      for (std::size_t p : bn.parents(v)) stack.emplace_back(p, true);
      for (std::size_t c : bn.children(v)) stack.emplace_back(c, false);
    } else {
      if (!given[v]) {
        for (std::size_t c : bn.children(v)) stack.emplace_back(c, false);
      }
      if (opens[v]) {
        for (std::size_t p : bn.parents(v)) stack.emplace_back(p, true);
      }
    }
  }
  return true;
}

bool d_separated_oracle(const Bn& bn, const IndexQuery& q) {
  check_indices(bn, q);
  const std::size_t n = bn.size();
  std::vector<std::size_t> seed = q.x;
  seed.insert(seed.end(), q.y.begin(), q.y.end());
  seed.insert(seed.end(), q.z.begin(), q.z.end());
  const std::vector<char> keep = ancestors(bn, seed);

  // Moral graph of the ancestral subgraph.
  std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
  for (std::size_t v = 0; v < n; ++v) {
    if (!keep[v]) continue;
    const auto& ps = bn.parents(v);
    for (std::size_t a = 0; a < ps.size(); ++a) {
      adj[ps[a]][v] = adj[v][ps[a]] = 1;
      for (std::size_t b = a + 1; b < ps.size(); ++b) adj[ps[a]][ps[b]] = adj[ps[b]][ps[a]] = 1;
    }
  }

  const std::vector<char> removed = mask(n, q.z);
  const std::vector<char> target = mask(n, q.y);
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> stack = q.x;
  for (std::size_t x : q.x) seen[x] = 1;
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    if (target[v]) return false;
    for (std::size_t w = 0; w < n; ++w) {
      if (adj[v][w] && keep[w] && !removed[w] && !seen[w]) {
        seen[w] = 1;
        stack.push_back(w);
      }
    }
  }
  return true;
}

std::vector<CiStatement> implied_independencies(const Bn& bn, Scope scope, std::size_t max_conditioning) {
  if (max_conditioning > 4) throw QueryError("implied_independencies: conditioning size is capped at 4");
  std::vector<std::size_t> nodes;
  for (std::size_t i = 0; i < bn.size(); ++i) {
    if (scope == Scope::All || bn.node(i).kind == NodeKind::Observed) nodes.push_back(i);
  }
  if (nodes.empty()) throw QueryError("implied_independencies: empty scope");

  std::vector<CiStatement> out;
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    for (std::size_t b = a + 1; b < nodes.size(); ++b) {
      std::vector<std::size_t> rest;
      for (std::size_t c = 0; c < nodes.size(); ++c) {
        if (c != a && c != b) rest.push_back(nodes[c]);
      }
      // Subsets in order of size, then lexicographically by position.
      for (std::size_t size = 0; size <= std::min(max_conditioning, rest.size()); ++size) {
        std::vector<char> pick(rest.size(), 0);
        std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(size), 1);
        do {
          IndexQuery q{{nodes[a]}, {nodes[b]}, {}};
          for (std::size_t r = 0; r < rest.size(); ++r) {
            if (pick[r]) q.z.push_back(rest[r]);
          }
          if (d_separated(bn, q)) {
            CiStatement s{{bn.node(nodes[a]).id}, {bn.node(nodes[b]).id}, {}};
            for (std::size_t zi : q.z) s.z.push_back(bn.node(zi).id);
            out.push_back(std::move(s));
          }
        } while (std::prev_permutation(pick.begin(), pick.end()));
      }
    }
  }
  return out;
}

}  // namespace flowbn::bn
