#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "flowbn/bn/graph.hpp"
#include "flowbn/numcore/rng.hpp"

namespace flowbn::bn {

// Joint probability table over at most 6 categorical variables with at most
// 4 states each. Entries are stored with the last variable varying fastest.
class DiscreteJoint {
 public:
  // Throws InputError on bad cardinalities, negative entries, a size
  // mismatch, or a total further than 1e-12 from 1.
  DiscreteJoint(std::vector<std::size_t> cards, std::vector<double> probs);

  std::size_t variables() const { return cards_.size(); }
  const std::vector<std::size_t>& cards() const { return cards_; }
  const std::vector<double>& probs() const { return probs_; }

  // Marginal over `vars` (ascending), laid out like a joint over those vars.
  std::vector<double> marginal(const std::vector<std::size_t>& vars) const;

  // Flat index of a full assignment, and the inverse.
  std::size_t index(std::span<const std::size_t> assignment) const;
  std::vector<std::size_t> assignment(std::size_t index) const;

  // Whether X _|_ Y | Z holds, checked as p(x,y,z) p(z) = p(x,z) p(y,z) for
  // every configuration within `tol`.
  bool independent(const std::vector<std::size_t>& x, const std::vector<std::size_t>& y,
                   const std::vector<std::size_t>& z, double tol = 1e-9) const;

 private:
  std::vector<std::size_t> cards_;
  std::vector<double> probs_;
};

// The joint's variables map onto the graph's nodes in node order. Both
// checks require every node to be observed and throw InputError otherwise.

// Whether the joint equals the product of its own conditionals
// p(x_i | parents) within 1e-9 per entry. Parent configurations of zero
// probability impose nothing.
bool factorizes(const DiscreteJoint& joint, const Bn& bn);

// Whether every d-separation statement of the graph holds in the joint. The
// local Markov statements together with all singleton-pair statements are
// checked, which covers every statement the graph implies.
bool is_imap(const Bn& bn, const DiscreteJoint& joint);

// Joint drawn as a product of random conditional tables that follow the
// graph, so it factorizes by construction.
DiscreteJoint random_factored_joint(const Bn& bn, const std::vector<std::size_t>& cards, num::Rng& rng);

// Joint with i.i.d. uniform-then-normalized entries.
DiscreteJoint random_joint(const std::vector<std::size_t>& cards, num::Rng& rng);

}  // namespace flowbn::bn
