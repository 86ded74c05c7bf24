#include "flowbn/bn/discrete.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flowbn/bn/dsep.hpp"
#include "flowbn/error.hpp"

namespace flowbn::bn {

namespace {

constexpr double kTolerance = 1e-9;

std::size_t table_size(const std::vector<std::size_t>& cards) {
  std::size_t n = 1;
  for (std::size_t c : cards) n *= c;
  return n;
}

// Index of the projection of `assign` onto `vars` in a table over `vars`.
std::size_t project(const std::vector<std::size_t>& cards, std::span<const std::size_t> assign,
                    const std::vector<std::size_t>& vars) {
  std::size_t idx = 0;
  for (std::size_t v : vars) idx = idx * cards[v] + assign[v];
  return idx;
}

std::vector<std::size_t> sorted_union(std::vector<std::size_t> a, const std::vector<std::size_t>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

void check_pair(const DiscreteJoint& joint, const Bn& bn) {
  if (joint.variables() != bn.size()) {
    throw InputError("joint has " + std::to_string(joint.variables()) + " variables but the graph has " +
                     std::to_string(bn.size()) + " nodes");
  }
  for (const Node& n : bn.nodes()) {
    if (n.kind != NodeKind::Observed) throw InputError("joint checks need an all-observed graph; '" + n.id + "' is not");
  }
}

std::vector<char> descendants(const Bn& bn, std::size_t v) {
  std::vector<char> seen(bn.size(), 0);
  std::vector<std::size_t> stack{v};
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    for (std::size_t c : bn.children(u)) {
      if (!seen[c]) {
        seen[c] = 1;
        stack.push_back(c);
      }
    }
  }
  return seen;
}

}  // namespace

DiscreteJoint::DiscreteJoint(std::vector<std::size_t> cards, std::vector<double> probs)
    : cards_(std::move(cards)), probs_(std::move(probs)) {
  if (cards_.empty() || cards_.size() > 6) throw InputError("DiscreteJoint: need 1 to 6 variables");
  for (std::size_t c : cards_) {
    if (c < 1 || c > 4) throw InputError("DiscreteJoint: cardinalities must lie in 1..4");
  }
  if (probs_.size() != table_size(cards_)) throw InputError("DiscreteJoint: table size does not match cardinalities");
  double total = 0.0;
  for (double p : probs_) {
    if (!std::isfinite(p) || p < 0.0) throw InputError("DiscreteJoint: entries must be finite and non-negative");
    total += p;
  }
  if (std::fabs(total - 1.0) > 1e-12) throw InputError("DiscreteJoint: entries must sum to 1");
}

std::size_t DiscreteJoint::index(std::span<const std::size_t> assignment) const {
  if (assignment.size() != cards_.size()) throw InputError("DiscreteJoint: assignment length mismatch");
  std::size_t idx = 0;
  for (std::size_t v = 0; v < cards_.size(); ++v) {
    if (assignment[v] >= cards_[v]) throw InputError("DiscreteJoint: state out of range");
    idx = idx * cards_[v] + assignment[v];
  }
  return idx;
}

std::vector<std::size_t> DiscreteJoint::assignment(std::size_t index) const {
  std::vector<std::size_t> a(cards_.size());
  for (std::size_t v = cards_.size(); v-- > 0;) {
    a[v] = index % cards_[v];
    index /= cards_[v];
  }
  return a;
}

std::vector<double> DiscreteJoint::marginal(const std::vector<std::size_t>& vars) const {
  std::size_t size = 1;
  for (std::size_t v : vars) {
    if (v >= cards_.size()) throw InputError("DiscreteJoint: variable out of range");
    size *= cards_[v];
  }
  std::vector<double> out(size, 0.0);
  for (std::size_t i = 0; i < probs_.size(); ++i) out[project(cards_, assignment(i), vars)] += probs_[i];
  return out;
}

bool DiscreteJoint::independent(const std::vector<std::size_t>& x, const std::vector<std::size_t>& y,
                                const std::vector<std::size_t>& z, double tol) const {
  std::vector<std::size_t> zs = z;
  std::sort(zs.begin(), zs.end());
  const auto xz = sorted_union(x, zs);
  const auto yz = sorted_union(y, zs);
  const auto xyz = sorted_union(xz, yz);
  const auto p_z = marginal(zs);
  const auto p_xz = marginal(xz);
  const auto p_yz = marginal(yz);
  const auto p_xyz = marginal(xyz);
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    const auto a = assignment(i);
    const double lhs = p_xyz[project(cards_, a, xyz)] * p_z[project(cards_, a, zs)];
    const double rhs = p_xz[project(cards_, a, xz)] * p_yz[project(cards_, a, yz)];
    if (std::fabs(lhs - rhs) > tol) return false;
  }
  return true;
}

bool factorizes(const DiscreteJoint& joint, const Bn& bn) {
  check_pair(joint, bn);
  const std::size_t n = bn.size();
  std::vector<std::vector<std::size_t>> family(n);
  std::vector<std::vector<std::size_t>> parents(n);
  std::vector<std::vector<double>> p_family(n);
  std::vector<std::vector<double>> p_parents(n);
  for (std::size_t i = 0; i < n; ++i) {
    parents[i] = bn.parents(i);
    std::sort(parents[i].begin(), parents[i].end());
    family[i] = sorted_union(parents[i], {i});
    p_family[i] = joint.marginal(family[i]);
    p_parents[i] = joint.marginal(parents[i]);
  }
  for (std::size_t e = 0; e < joint.probs().size(); ++e) {
    const auto a = joint.assignment(e);
    double product = 1.0;
    for (std::size_t i = 0; i < n && product != 0.0; ++i) {
      const double denom = p_parents[i][project(joint.cards(), a, parents[i])];
      product = denom == 0.0 ? 0.0 : product * p_family[i][project(joint.cards(), a, family[i])] / denom;
    }
    if (std::fabs(product - joint.probs()[e]) > kTolerance) return false;
  }
  return true;
}

bool is_imap(const Bn& bn, const DiscreteJoint& joint) {
  check_pair(joint, bn);
  const std::size_t n = bn.size();
  // Local Markov: each node against its non-descendants given its parents.
  for (std::size_t i = 0; i < n; ++i) {
    const auto desc = descendants(bn, i);
    std::vector<std::size_t> pa = bn.parents(i);
    std::vector<std::size_t> rest;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && !desc[j] && std::find(pa.begin(), pa.end(), j) == pa.end()) rest.push_back(j);
    }
    if (!rest.empty() && !joint.independent({i}, rest, pa, kTolerance)) return false;
  }
  // Every singleton statement the graph implies.
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      std::vector<std::size_t> others;
      for (std::size_t c = 0; c < n; ++c) {
        if (c != a && c != b) others.push_back(c);
      }
      for (std::size_t bits = 0; bits < (std::size_t{1} << others.size()); ++bits) {
        IndexQuery q{{a}, {b}, {}};
        for (std::size_t k = 0; k < others.size(); ++k) {
          if (bits >> k & 1) q.z.push_back(others[k]);
        }
        if (d_separated(bn, q) && !joint.independent(q.x, q.y, q.z, kTolerance)) return false;
      }
    }
  }
  return true;
}

DiscreteJoint random_factored_joint(const Bn& bn, const std::vector<std::size_t>& cards, num::Rng& rng) {
  if (cards.size() != bn.size()) throw InputError("random_factored_joint: one cardinality per node required");
  const std::size_t n = bn.size();
  // cpt[i][parent_config * card_i + state]
  std::vector<std::vector<double>> cpt(n);
  std::vector<std::vector<std::size_t>> parents(n);
  for (std::size_t i = 0; i < n; ++i) {
    parents[i] = bn.parents(i);
    std::sort(parents[i].begin(), parents[i].end());
    std::size_t configs = 1;
    for (std::size_t p : parents[i]) configs *= cards[p];
    cpt[i].resize(configs * cards[i]);
    for (std::size_t c = 0; c < configs; ++c) {
      double* row = cpt[i].data() + c * cards[i];
      double total = 0.0;
      for (std::size_t s = 0; s < cards[i]; ++s) {
        // Occasional exact zeros exercise the zero-parent-probability path.
        row[s] = rng.uniform() < 0.15 ? 0.0 : rng.uniform(0.05, 1.0);
        total += row[s];
      }
      if (total == 0.0) {
        row[rng.below(cards[i])] = 1.0;
        total = 1.0;
      }
      for (std::size_t s = 0; s < cards[i]; ++s) row[s] /= total;
    }
  }
  std::vector<double> probs(table_size(cards));
  double total = 0.0;
  for (std::size_t e = 0; e < probs.size(); ++e) {
    std::vector<std::size_t> a(n);
    std::size_t rem = e;
    for (std::size_t v = n; v-- > 0;) {
      a[v] = rem % cards[v];
      rem /= cards[v];
    }
    double p = 1.0;
    for (std::size_t i = 0; i < n; ++i) p *= cpt[i][project(cards, a, parents[i]) * cards[i] + a[i]];
    probs[e] = p;
    total += p;
  }
  for (double& p : probs) p /= total;
  return DiscreteJoint(cards, std::move(probs));
}

DiscreteJoint random_joint(const std::vector<std::size_t>& cards, num::Rng& rng) {
  std::vector<double> probs(table_size(cards));
  for (double& p : probs) p = rng.uniform();
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  for (double& p : probs) p /= total;
  return DiscreteJoint(cards, std::move(probs));
}

}  // namespace flowbn::bn
