#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "flowbn/bn/graph.hpp"

namespace flowbn::bn {

// Node-index form of a CI query.
struct IndexQuery {
  std::vector<std::size_t> x;
  std::vector<std::size_t> y;
  std::vector<std::size_t> z;
};

// Resolves ids and checks that X, Y are non-empty and X, Y, Z pairwise
// disjoint. Throws QueryError otherwise.
IndexQuery resolve(const Bn& bn, const CiStatement& q);

// Plain d-separation via Bayes-Ball reachability. Bijective markers and
// deterministic flags play no part.
bool d_separated(const Bn& bn, const CiStatement& q);
bool d_separated(const Bn& bn, const IndexQuery& q);

// Same question answered on the moralized ancestral graph.
bool d_separated_oracle(const Bn& bn, const CiStatement& q);
bool d_separated_oracle(const Bn& bn, const IndexQuery& q);

enum class Scope { Observed, All };

// Every singleton statement (a _|_ b | Z) over the scope that holds by
// d-separation, with a before b in node order and Z drawn from the rest of
// the scope, |Z| <= max_conditioning <= 4.
std::vector<CiStatement> implied_independencies(const Bn& bn, Scope scope, std::size_t max_conditioning);

}  // namespace flowbn::bn
