#pragma once

// Shared generators and numerical oracles for the test binaries.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "flowbn/bn/dsep.hpp"
#include "flowbn/bn/graph.hpp"
#include "flowbn/flows/flow.hpp"
#include "flowbn/flows/model.hpp"
#include "flowbn/flows/spec.hpp"
#include "flowbn/numcore/rng.hpp"

namespace flowbn::test {

// Every DAG on n nodes whose edges point from lower to higher index. Every
// DAG is isomorphic to one of these.
inline std::vector<bn::Bn> all_ordered_dags(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> slots;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) slots.emplace_back(a, b);
  }
  std::vector<bn::Bn> out;
  for (std::size_t bits = 0; bits < (std::size_t{1} << slots.size()); ++bits) {
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t k = 0; k < slots.size(); ++k) {
      if (bits >> k & 1) edges.push_back(slots[k]);
    }
    out.push_back(bn::make_dag(n, edges));
  }
  return out;
}

// All (a, b, Z) with a < b and Z a subset of the other nodes.
inline void for_each_singleton_query(std::size_t n, const std::function<void(const bn::IndexQuery&)>& fn) {
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      std::vector<std::size_t> rest;
      for (std::size_t c = 0; c < n; ++c) {
        if (c != a && c != b) rest.push_back(c);
      }
      for (std::size_t bits = 0; bits < (std::size_t{1} << rest.size()); ++bits) {
        bn::IndexQuery q{{a}, {b}, {}};
        for (std::size_t k = 0; k < rest.size(); ++k) {
          if (bits >> k & 1) q.z.push_back(rest[k]);
        }
        fn(q);
      }
    }
  }
}

// Random DAG: a random node order, each forward pair joined with
// probability p.
inline bn::Bn random_dag(num::Rng& rng, std::size_t n, double p) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (rng.uniform() < p) edges.emplace_back(order[a], order[b]);
    }
  }
  return bn::make_dag(n, edges);
}

// Random disjoint X, Y (non-empty) and Z over n >= 2 nodes.
inline bn::IndexQuery random_query(num::Rng& rng, std::size_t n) {
  bn::IndexQuery q;
  const std::size_t a = rng.below(n);
  std::size_t b = rng.below(n - 1);
  if (b >= a) ++b;
  q.x.push_back(a);
  q.y.push_back(b);
  for (std::size_t v = 0; v < n; ++v) {
    if (v == a || v == b) continue;
    const double u = rng.uniform();
    if (u < 0.1) {
      q.x.push_back(v);
    } else if (u < 0.2) {
      q.y.push_back(v);
    } else if (u < 0.5) {
      q.z.push_back(v);
    }
  }
  return q;
}

inline std::vector<std::size_t> random_cards(num::Rng& rng, std::size_t n) {
  std::vector<std::size_t> cards(n);
  for (auto& c : cards) c = 2 + rng.below(2);
  return cards;
}

// Central-difference Jacobian of f at x with step h.
inline std::vector<std::vector<double>> numerical_jacobian(
    const std::function<std::vector<double>(const std::vector<double>&)>& f, std::vector<double> x, double h) {
  const std::size_t d = x.size();
  std::vector<std::vector<double>> jac(d, std::vector<double>(d));
  for (std::size_t j = 0; j < d; ++j) {
    const double keep = x[j];
    x[j] = keep + h;
    const auto up = f(x);
    x[j] = keep - h;
    const auto down = f(x);
    x[j] = keep;
    for (std::size_t i = 0; i < d; ++i) jac[i][j] = (up[i] - down[i]) / (2.0 * h);
  }
  return jac;
}

// Determinant by Gaussian elimination with partial pivoting.
inline double determinant(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  double det = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
    }
    if (a[piv][c] == 0.0) return 0.0;
    if (piv != c) {
      std::swap(a[piv], a[c]);
      det = -det;
    }
    det *= a[c][c];
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  return det;
}

// Central difference of a scalar function along one coordinate. `kinked` is
// set when the two one-sided differences disagree, i.e. the probe straddles
// a point where the function is not differentiable.
struct Derivative {
  double value = 0.0;
  bool kinked = false;
};

inline Derivative central_difference(const std::function<double(double)>& f, double at, double h) {
  const double mid = f(at);
  const double up = f(at + h);
  const double down = f(at - h);
  const double right = (up - mid) / h;
  const double left = (mid - down) / h;
  const bool kinked = std::fabs(right - left) > 1e-3 * std::max({std::fabs(right), std::fabs(left), 1.0});
  return {(up - down) / (2.0 * h), kinked};
}

inline double relative_error(double analytic, double numeric, double floor = 1e-3) {
  return std::fabs(analytic - numeric) / std::max({std::fabs(analytic), std::fabs(numeric), floor});
}

inline const flows::ModelOptions kSmall{{16, 16}};

inline flows::FlowModel random_model(const flows::FlowSpec& spec, num::Rng& rng, double scale = 0.3,
                                     const flows::ModelOptions& options = kSmall) {
  flows::FlowModel model(spec, rng, options);
  flows::perturb_parameters(model, rng, scale);
  return model;
}

// A random architecture with d <= 4 and K <= 4.
inline flows::FlowSpec random_spec(num::Rng& rng, bool monotone) {
  flows::FlowSpec spec;
  spec.dim = 2 + rng.below(3);
  const std::size_t steps = 1 + rng.below(4);
  for (std::size_t s = 0; s < steps; ++s) {
    flows::StepSpec step;
    if (rng.uniform() < 0.5) {
      step.conditioner = flows::Autoregressive{};
    } else {
      step.conditioner = flows::Coupling{2 + rng.below(spec.dim - 1)};
    }
    if (monotone) step.normalizer = flows::MonotonePwl{8};
    if (s > 0) {
      std::vector<std::size_t> order(spec.dim);
      for (std::size_t i = 0; i < spec.dim; ++i) order[i] = i;
      for (std::size_t i = spec.dim; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
      step.permutation = flows::ExplicitPermutation{order};
    }
    spec.steps.push_back(step);
  }
  return spec;
}

inline std::vector<double> random_point(num::Rng& rng, std::size_t d, double sd = 1.5) {
  std::vector<double> x(d);
  for (auto& v : x) v = sd * rng.normal();
  return x;
}

// Numerical Jacobian of x -> flow_forward(x).z. Returns false when a probe
// straddles a kink of a piecewise-linear normalizer.
inline bool flow_jacobian(const flows::FlowModel& model, const std::vector<double>& x, double h,
                          std::vector<std::vector<double>>& jac) {
  const std::size_t d = x.size();
  jac.assign(d, std::vector<double>(d));
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < d; ++i) {
      const auto der = central_difference(
          [&](double v) {
            auto p = x;
            p[j] = v;
            return flows::flow_forward(model, p).first[i];
          },
          x[j], h);
      if (der.kinked) return false;
      jac[i][j] = der.value;
    }
  }
  return true;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

}  // namespace flowbn::test
